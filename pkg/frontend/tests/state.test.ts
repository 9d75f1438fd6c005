import { describe, expect, it } from 'vitest'

import { ApiClient, type SessionRecord } from '../src/api.js'
import { buildView, canSend, formatMetrics } from '../src/state.js'

const urls = new ApiClient('http://svc')

function makeSession(overrides: Partial<SessionRecord> = {}): SessionRecord {
    return {
        id: 'abc123',
        state: 'generated',
        input_photo: 'input.png',
        ground_truth: 'ground_truth.png',
        standardized: 'standardized.png',
        phase2_mask: 'phase2_mask.png',
        iterations: [],
        chat_log: [],
        accepted_iteration: null,
        created_at: 't0',
        updated_at: 't1',
        ...overrides,
    }
}

function withIterations(n: number, overrides: Partial<SessionRecord> = {}): SessionRecord {
    const iterations = Array.from({ length: n }, (_, i) => ({
        index: i,
        prompt_text: `prompt ${i}`,
        chat_turn: i,
        output_mask: `iter_00${i}.png`,
        input_digest: `d${i}`,
        output_digest: `d${i + 1}`,
        provider_id: 'mock',
        timestamp: `t${i}`,
        metrics: { iou: 0.5 + i / 10, ssim: 0.9, hausdorff_mean: 2.0, hausdorff_max: 5.0, perceptual: 0.1 },
    }))
    return makeSession({ state: 'refining', iterations, ...overrides })
}

describe('buildView', () => {
    it('is deterministic: same JSON yields an identical view (reload contract)', () => {
        const session = withIterations(2)
        const a = buildView(session, urls)
        const b = buildView(JSON.parse(JSON.stringify(session)), urls)
        expect(a).toEqual(b)
    })

    it('defaults the selection to the latest iteration', () => {
        const view = buildView(withIterations(3), urls)
        expect(view.selectedIteration).toBe(2)
        expect(view.selectedMaskUrl).toBe('http://svc/sessions/abc123/files/iter_002.png')
    })

    it('chains iteration input thumbnails from the predecessor output', () => {
        const view = buildView(withIterations(2), urls)
        expect(view.iterations[0].inputThumbUrl).toContain('phase2_mask.png')
        expect(view.iterations[1].inputThumbUrl).toContain('iter_000.png')
    })

    it('enables chat only in generated/refining states', () => {
        expect(buildView(makeSession({ state: 'created' }), urls).chatEnabled).toBe(false)
        expect(buildView(makeSession({ state: 'generated' }), urls).chatEnabled).toBe(true)
        expect(buildView(withIterations(1), urls).chatEnabled).toBe(true)
        const accepted = withIterations(1, { state: 'accepted', accepted_iteration: 0 })
        const view = buildView(accepted, urls)
        expect(view.chatEnabled).toBe(false)
        expect(view.chatDisabledReason).toMatch(/read-only/)
    })

    it('gates accept and export on state', () => {
        const refining = buildView(withIterations(1), urls)
        expect(refining.acceptEnabled).toBe(true)
        expect(refining.exportEnabled).toBe(false)
        const accepted = buildView(
            withIterations(1, { state: 'accepted', accepted_iteration: 0 }), urls)
        expect(accepted.acceptEnabled).toBe(false)
        expect(accepted.exportEnabled).toBe(true)
        expect(accepted.iterations[0].accepted).toBe(true)
    })

    it('omits overlay urls without ground truth', () => {
        const view = buildView(withIterations(1, { ground_truth: null }), urls)
        expect(view.overlayAvailable).toBe(false)
        expect(view.selectedOverlayUrl).toBeNull()
        const withTruth = buildView(withIterations(1), urls)
        expect(withTruth.selectedOverlayUrl).toBe('http://svc/sessions/abc123/overlay/0')
    })

    it('clamps an out-of-range selection back to the latest iteration', () => {
        const view = buildView(withIterations(2), urls, 9)
        expect(view.selectedIteration).toBe(1)
        const explicit = buildView(withIterations(2), urls, 0)
        expect(explicit.selectedIteration).toBe(0)
    })
})

describe('canSend', () => {
    it('blocks while a refine request is in flight', () => {
        const view = buildView(withIterations(1), urls)
        expect(canSend({ inFlight: false }, view)).toBe(true)
        expect(canSend({ inFlight: true }, view)).toBe(false)
    })
})

describe('formatMetrics', () => {
    it('renders the available metric values compactly', () => {
        expect(formatMetrics({ iou: 0.912, ssim: 0.995, hausdorff_mean: 1.25 }))
            .toBe('IoU 0.912 · SSIM 0.995 · HD 1.25px')
        expect(formatMetrics(null)).toBe('')
    })
})
