/**
 * Typed client for the remflow session HTTP API.
 *
 * The UI performs no image processing: every pixel it shows comes back from
 * these endpoints as service-rendered PNGs.
 */

export interface PromptPatch {
    action: string
    region: string
}

export interface ChatTurn {
    role: 'operator' | 'system'
    text: string
    timestamp: string
    derived_prompt_patch: PromptPatch | null
}

export interface IterationRecord {
    index: number
    prompt_text: string
    chat_turn: number | null
    output_mask: string
    input_digest: string
    output_digest: string
    provider_id: string
    timestamp: string
    metrics: Record<string, number> | null
}

export interface SessionRecord {
    id: string
    state: 'created' | 'preprocessed' | 'generated' | 'refining' | 'accepted'
    input_photo: string
    ground_truth: string | null
    standardized: string | null
    phase2_mask: string | null
    iterations: IterationRecord[]
    chat_log: ChatTurn[]
    accepted_iteration: number | null
    created_at: string
    updated_at: string
}

export interface RefineResponse {
    session: SessionRecord
    clarification: string | null
    iteration: number | null
}

export class ApiError extends Error {
    constructor(
        public status: number,
        public code: string,
        message: string,
        public detail: string = '',
    ) {
        super(message)
    }
}

async function parseError(resp: Response): Promise<ApiError> {
    try {
        const body = await resp.json()
        return new ApiError(resp.status, body.code ?? 'error',
            body.message ?? resp.statusText, body.detail ?? '')
    } catch {
        return new ApiError(resp.status, 'error', resp.statusText)
    }
}

export class ApiClient {
    constructor(
        private baseUrl: string = '',
        private fetchFn: typeof fetch = fetch,
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchFn(this.baseUrl + path, init)
        if (!resp.ok) {
            throw await parseError(resp)
        }
        return resp.json() as Promise<T>
    }

    async healthz(): Promise<boolean> {
        try {
            const resp = await this.fetchFn(this.baseUrl + '/healthz')
            return resp.ok
        } catch {
            return false
        }
    }

    async createSession(photo: Blob, groundTruth?: Blob): Promise<{ id: string }> {
        const form = new FormData()
        form.append('photo', photo, 'photo.png')
        if (groundTruth) {
            form.append('ground_truth', groundTruth, 'ground_truth.png')
        }
        return this.request('/sessions', { method: 'POST', body: form })
    }

    async getSession(id: string): Promise<SessionRecord> {
        return this.request(`/sessions/${id}`)
    }

    async generate(id: string, checkpoint: string): Promise<SessionRecord> {
        return this.request(`/sessions/${id}/generate`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ checkpoint }),
        })
    }

    async refine(id: string, text: string, providerId = 'mock'): Promise<RefineResponse> {
        return this.request(`/sessions/${id}/refine`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ text, provider_id: providerId }),
        })
    }

    async accept(id: string, iteration: number): Promise<SessionRecord> {
        return this.request(`/sessions/${id}/accept`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ iteration }),
        })
    }

    fileUrl(id: string, artifact: string): string {
        return `${this.baseUrl}/sessions/${id}/files/${artifact}`
    }

    overlayUrl(id: string, iteration: number): string {
        return `${this.baseUrl}/sessions/${id}/overlay/${iteration}`
    }

    exportUrl(id: string, format: 'svg' | 'dxf'): string {
        return `${this.baseUrl}/sessions/${id}/export?format=${format}`
    }
}
