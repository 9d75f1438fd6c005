/**
 * Pure view-model derivation: the rendered state is a function of the last
 * fetched session JSON plus the ephemeral iteration selection, never of
 * client-side pipeline data. Reloading the page and re-deriving from
 * GET /sessions/{id} reconstructs the identical view.
 */

import type { ChatTurn, SessionRecord } from './api.js'

export interface UrlBuilder {
    fileUrl(id: string, artifact: string): string
    overlayUrl(id: string, iteration: number): string
    exportUrl(id: string, format: 'svg' | 'dxf'): string
}

export interface IterationCard {
    index: number
    promptText: string
    providerId: string
    outputThumbUrl: string
    inputThumbUrl: string
    metrics: Record<string, number> | null
    accepted: boolean
}

export interface SessionView {
    id: string
    state: SessionRecord['state']
    chatEnabled: boolean
    chatDisabledReason: string | null
    acceptEnabled: boolean
    exportEnabled: boolean
    inputPhotoUrl: string
    phase2MaskUrl: string | null
    overlayAvailable: boolean
    transcript: ChatTurn[]
    iterations: IterationCard[]
    selectedIteration: number | null
    selectedMaskUrl: string | null
    selectedOverlayUrl: string | null
    acceptedIteration: number | null
    exportSvgUrl: string
    exportDxfUrl: string
}

/** Iterations chain: iteration n consumes iteration n-1's output (or the
 * phase-2 mask for n = 0), so the input thumb comes from the predecessor. */
function inputArtifact(session: SessionRecord, index: number): string {
    if (index === 0) {
        return session.phase2_mask ?? session.input_photo
    }
    return session.iterations[index - 1].output_mask
}

export function buildView(
    session: SessionRecord,
    urls: UrlBuilder,
    selected: number | null = null,
): SessionView {
    const canChat = session.state === 'generated' || session.state === 'refining'
    const lastIndex = session.iterations.length - 1
    const selectedIteration =
        selected !== null && selected >= 0 && selected <= lastIndex
            ? selected
            : lastIndex >= 0 ? lastIndex : null

    let chatDisabledReason: string | null = null
    if (session.state === 'accepted') {
        chatDisabledReason = 'Session accepted and read-only; export or start a new session.'
    } else if (!canChat) {
        chatDisabledReason = 'Run contour generation before refining.'
    }

    return {
        id: session.id,
        state: session.state,
        chatEnabled: canChat,
        chatDisabledReason,
        acceptEnabled: session.state === 'refining' && selectedIteration !== null,
        exportEnabled: session.state === 'accepted',
        inputPhotoUrl: urls.fileUrl(session.id, session.input_photo),
        phase2MaskUrl: session.phase2_mask
            ? urls.fileUrl(session.id, session.phase2_mask)
            : null,
        overlayAvailable: session.ground_truth !== null,
        transcript: session.chat_log,
        iterations: session.iterations.map((iter) => ({
            index: iter.index,
            promptText: iter.prompt_text,
            providerId: iter.provider_id,
            outputThumbUrl: urls.fileUrl(session.id, iter.output_mask),
            inputThumbUrl: urls.fileUrl(session.id, inputArtifact(session, iter.index)),
            metrics: iter.metrics,
            accepted: session.accepted_iteration === iter.index,
        })),
        selectedIteration,
        selectedMaskUrl: selectedIteration !== null
            ? urls.fileUrl(session.id, session.iterations[selectedIteration].output_mask)
            : null,
        selectedOverlayUrl:
            selectedIteration !== null && session.ground_truth !== null
                ? urls.overlayUrl(session.id, selectedIteration)
                : null,
        acceptedIteration: session.accepted_iteration,
        exportSvgUrl: urls.exportUrl(session.id, 'svg'),
        exportDxfUrl: urls.exportUrl(session.id, 'dxf'),
    }
}

/** Client-side single-flight guard: one refine request per session at a
 * time, mirroring the service's per-session serialization. */
export interface PendingState {
    inFlight: boolean
}

export function canSend(pending: PendingState, view: SessionView): boolean {
    return view.chatEnabled && !pending.inFlight
}

export function formatMetrics(metrics: Record<string, number> | null): string {
    if (!metrics) {
        return ''
    }
    const parts: string[] = []
    if (typeof metrics.iou === 'number') {
        parts.push(`IoU ${metrics.iou.toFixed(3)}`)
    }
    if (typeof metrics.ssim === 'number') {
        parts.push(`SSIM ${metrics.ssim.toFixed(3)}`)
    }
    if (typeof metrics.hausdorff_mean === 'number') {
        parts.push(`HD ${metrics.hausdorff_mean.toFixed(2)}px`)
    }
    return parts.join(' · ')
}
