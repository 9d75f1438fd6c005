/**
 * Bootstrap: wires the API client, view derivation, and renderers. The
 * session id lives in the URL hash, so reloading re-derives the entire view
 * from GET /sessions/{id} alone.
 */

import { ApiClient, ApiError, type SessionRecord } from './api.js'
import { buildView, type PendingState } from './state.js'
import { renderChat, renderReview, type Handlers } from './ui.js'

const api = new ApiClient('')

let session: SessionRecord | null = null
let selected: number | null = null
const pending: PendingState = { inFlight: false }
// System-side notices (network errors) that are not part of the persisted
// transcript; cleared on the next successful fetch.
let transientNotice: string | null = null

function hashSessionId(): string | null {
    const match = window.location.hash.match(/sid=([0-9a-f]+)/)
    return match ? match[1] : null
}

function render(): void {
    const chat = document.getElementById('chat-panel')!
    const review = document.getElementById('review-panel')!
    const setup = document.getElementById('setup-panel')!
    if (!session) {
        chat.replaceChildren()
        review.replaceChildren()
        setup.classList.remove('hidden')
        return
    }
    setup.classList.add('hidden')
    const view = buildView(session, api, selected)
    if (transientNotice) {
        view.transcript = [...view.transcript, {
            role: 'system', text: transientNotice, timestamp: '',
            derived_prompt_patch: null,
        }]
    }
    const handlers: Handlers = { onSend, onSelectIteration, onAccept }
    renderChat(chat, view, pending.inFlight, handlers)
    renderReview(review, view, handlers)
}

async function refresh(): Promise<void> {
    const id = session?.id ?? hashSessionId()
    if (!id) {
        render()
        return
    }
    session = await api.getSession(id)
    transientNotice = null
    render()
}

async function onSend(text: string): Promise<void> {
    if (!session || pending.inFlight) {
        return
    }
    pending.inFlight = true
    render()
    try {
        const result = await api.refine(session.id, text)
        session = result.session
        selected = result.iteration ?? selected
    } catch (err) {
        transientNotice = err instanceof ApiError
            ? `refinement failed: ${err.message}`
            : `network error: ${String(err)}`
        try {
            session = await api.getSession(session.id)
        } catch {
            // keep the stale session; the notice explains the failure
        }
    } finally {
        pending.inFlight = false
        render()
    }
}

function onSelectIteration(index: number): void {
    selected = index
    render()
}

async function onAccept(): Promise<void> {
    if (!session || selected === null && session.iterations.length === 0) {
        return
    }
    const index = selected ?? session.iterations.length - 1
    try {
        session = await api.accept(session.id, index)
    } catch (err) {
        transientNotice = err instanceof ApiError
            ? `accept failed: ${err.message}`
            : `network error: ${String(err)}`
    }
    render()
}

async function onCreate(event: Event): Promise<void> {
    event.preventDefault()
    const photoInput = document.getElementById('photo-input') as HTMLInputElement
    const truthInput = document.getElementById('truth-input') as HTMLInputElement
    const checkpointInput = document.getElementById('checkpoint-input') as HTMLInputElement
    const status = document.getElementById('setup-status')!
    const photo = photoInput.files?.[0]
    if (!photo) {
        status.textContent = 'Choose a remnant photo first.'
        return
    }
    try {
        status.textContent = 'Uploading…'
        const created = await api.createSession(photo, truthInput.files?.[0])
        window.location.hash = `sid=${created.id}`
        status.textContent = 'Generating contour mask…'
        session = await api.generate(created.id, checkpointInput.value.trim())
        status.textContent = ''
        render()
    } catch (err) {
        status.textContent = err instanceof ApiError
            ? `failed: ${err.message}`
            : `network error: ${String(err)}`
    }
}

document.addEventListener('DOMContentLoaded', () => {
    document.getElementById('setup-form')!
        .addEventListener('submit', (event) => { void onCreate(event) })
    window.addEventListener('hashchange', () => {
        session = null
        selected = null
        void refresh()
    })
    void refresh()
})
