import { describe, expect, it } from 'vitest'

import { ApiClient, ApiError } from '../src/api.js'

function fakeFetch(status: number, body: unknown): typeof fetch {
    return async (input: RequestInfo | URL, init?: RequestInit) => {
        void input
        void init
        return new Response(JSON.stringify(body), {
            status,
            headers: { 'Content-Type': 'application/json' },
        })
    }
}

describe('ApiClient', () => {
    it('builds artifact, overlay, and export urls', () => {
        const api = new ApiClient('http://h:1')
        expect(api.fileUrl('s1', 'phase2_mask.png'))
            .toBe('http://h:1/sessions/s1/files/phase2_mask.png')
        expect(api.overlayUrl('s1', 2)).toBe('http://h:1/sessions/s1/overlay/2')
        expect(api.exportUrl('s1', 'dxf'))
            .toBe('http://h:1/sessions/s1/export?format=dxf')
    })

    it('passes through a refine clarification without an iteration', async () => {
        const api = new ApiClient('', fakeFetch(200, {
            session: { id: 's', iterations: [] },
            clarification: 'please rephrase',
            iteration: null,
        }))
        const result = await api.refine('s', 'gibberish')
        expect(result.clarification).toBe('please rephrase')
        expect(result.iteration).toBeNull()
    })

    it('raises a typed error from the service error shape', async () => {
        const api = new ApiClient('', fakeFetch(409, {
            code: 'wrong-state',
            message: 'refine not allowed in state created',
            detail: '',
        }))
        await expect(api.refine('s', 'x')).rejects.toMatchObject({
            status: 409,
            code: 'wrong-state',
        })
        await expect(api.refine('s', 'x')).rejects.toBeInstanceOf(ApiError)
    })

    it('sends multipart form data on session creation', async () => {
        let captured: RequestInit | undefined
        const recordingFetch: typeof fetch = async (input, init) => {
            void input
            captured = init
            return new Response(JSON.stringify({ id: 'new' }), { status: 201 })
        }
        const api = new ApiClient('', recordingFetch)
        const out = await api.createSession(new Blob([new Uint8Array([1, 2])]))
        expect(out.id).toBe('new')
        expect(captured?.method).toBe('POST')
        expect(captured?.body).toBeInstanceOf(FormData)
        const form = captured?.body as FormData
        expect(form.get('photo')).toBeInstanceOf(Blob)
        expect(form.get('ground_truth')).toBeNull()
    })
})
