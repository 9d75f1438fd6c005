/**
 * DOM rendering: full re-render of the chat panel and review panes from a
 * SessionView. Handlers are injected so the module stays testable.
 */

import type { SessionView } from './state.js'

export interface Handlers {
    onSend(text: string): void
    onSelectIteration(index: number): void
    onAccept(): void
}

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag)
    if (className) {
        node.className = className
    }
    if (text !== undefined) {
        node.textContent = text
    }
    return node
}

function pane(title: string, body: HTMLElement): HTMLElement {
    const wrap = el('div', 'pane')
    wrap.appendChild(el('h3', 'pane-title', title))
    wrap.appendChild(body)
    return wrap
}

function imagePane(title: string, url: string | null, placeholder: string): HTMLElement {
    if (url === null) {
        const note = el('div', 'placeholder', placeholder)
        return pane(title, note)
    }
    const img = el('img', 'pane-image') as HTMLImageElement
    img.src = url
    img.alt = title
    return pane(title, img)
}

export function renderChat(
    container: HTMLElement,
    view: SessionView,
    pendingInFlight: boolean,
    handlers: Handlers,
): void {
    container.replaceChildren()

    const transcript = el('div', 'transcript')
    for (const turn of view.transcript) {
        const bubble = el('div', `bubble bubble-${turn.role}`)
        bubble.appendChild(el('div', 'bubble-text', turn.text))
        if (turn.derived_prompt_patch) {
            const p = turn.derived_prompt_patch
            bubble.appendChild(el('div', 'bubble-patch', `→ ${p.action} on ${p.region}`))
        }
        transcript.appendChild(bubble)
    }
    container.appendChild(transcript)

    const form = el('form', 'chat-form') as HTMLFormElement
    const input = el('input', 'chat-input') as HTMLInputElement
    input.type = 'text'
    input.placeholder = 'e.g. remove noise in the top-right corner'
    const send = el('button', 'chat-send', 'Send') as HTMLButtonElement
    send.type = 'submit'

    const enabled = view.chatEnabled && !pendingInFlight
    input.disabled = !enabled
    send.disabled = !enabled
    if (view.chatDisabledReason) {
        input.title = view.chatDisabledReason
        send.title = view.chatDisabledReason
    } else if (pendingInFlight) {
        send.title = 'A refinement is already running for this session.'
    }

    form.appendChild(input)
    form.appendChild(send)
    form.addEventListener('submit', (event) => {
        event.preventDefault()
        const text = input.value.trim()
        if (text && enabled) {
            handlers.onSend(text)
            input.value = ''
        }
    })
    container.appendChild(form)
    transcript.scrollTop = transcript.scrollHeight
}

export function renderReview(
    container: HTMLElement,
    view: SessionView,
    handlers: Handlers,
): void {
    container.replaceChildren()

    const header = el('div', 'review-header')
    header.appendChild(el('span', `state-badge state-${view.state}`, view.state))
    header.appendChild(el('span', 'session-id', `session ${view.id}`))
    container.appendChild(header)

    const panes = el('div', 'panes')
    panes.appendChild(imagePane('Input photo', view.inputPhotoUrl, ''))
    panes.appendChild(imagePane('Generated mask', view.phase2MaskUrl,
        'Not generated yet.'))
    panes.appendChild(imagePane(
        view.selectedIteration !== null
            ? `Iteration ${view.selectedIteration}`
            : 'Refined mask',
        view.selectedMaskUrl, 'No refinement iterations yet.'))
    panes.appendChild(imagePane('Overlay', view.selectedOverlayUrl,
        view.overlayAvailable
            ? 'Overlay appears after the first iteration.'
            : 'No ground truth uploaded, so no overlay is available.'))
    container.appendChild(panes)

    if (view.iterations.length > 0) {
        const selector = el('div', 'iteration-selector')
        selector.appendChild(el('span', undefined, 'Iterations: '))
        for (const card of view.iterations) {
            const btn = el('button', 'iteration-chip', String(card.index)) as HTMLButtonElement
            if (card.index === view.selectedIteration) {
                btn.classList.add('selected')
            }
            if (card.accepted) {
                btn.classList.add('accepted')
                btn.textContent = `${card.index} ✓`
            }
            btn.addEventListener('click', () => handlers.onSelectIteration(card.index))
            selector.appendChild(btn)
        }
        container.appendChild(selector)

        const cards = el('div', 'iteration-cards')
        for (const card of view.iterations) {
            const node = el('div', 'iteration-card')
            if (card.index === view.selectedIteration) {
                node.classList.add('selected')
            }
            const thumbs = el('div', 'card-thumbs')
            const thumbIn = el('img', 'thumb') as HTMLImageElement
            thumbIn.src = card.inputThumbUrl
            thumbIn.alt = `iteration ${card.index} input`
            const thumbOut = el('img', 'thumb') as HTMLImageElement
            thumbOut.src = card.outputThumbUrl
            thumbOut.alt = `iteration ${card.index} output`
            thumbs.appendChild(thumbIn)
            thumbs.appendChild(el('span', 'thumb-arrow', '→'))
            thumbs.appendChild(thumbOut)
            node.appendChild(thumbs)
            node.appendChild(el('div', 'card-prompt', card.promptText))
            const meta = `${card.providerId}` +
                (card.metrics ? ` · ${formatCardMetrics(card.metrics)}` : '')
            node.appendChild(el('div', 'card-meta', meta))
            cards.appendChild(node)
        }
        container.appendChild(cards)
    }

    const actions = el('div', 'actions')
    const accept = el('button', 'accept-btn',
        view.selectedIteration !== null
            ? `Accept iteration ${view.selectedIteration}`
            : 'Accept') as HTMLButtonElement
    accept.disabled = !view.acceptEnabled
    if (!view.acceptEnabled && view.state === 'accepted') {
        accept.title = 'Already accepted.'
    }
    accept.addEventListener('click', () => handlers.onAccept())
    actions.appendChild(accept)

    for (const [label, url] of [['Download SVG', view.exportSvgUrl],
                                ['Download DXF', view.exportDxfUrl]] as const) {
        const link = el('a', 'export-link', label) as HTMLAnchorElement
        link.href = url
        if (!view.exportEnabled) {
            link.classList.add('disabled')
            link.title = 'Accept an iteration first.'
            link.addEventListener('click', (event) => event.preventDefault())
        }
        actions.appendChild(link)
    }
    container.appendChild(actions)
}

function formatCardMetrics(metrics: Record<string, number>): string {
    const parts: string[] = []
    if (typeof metrics.iou === 'number') {
        parts.push(`IoU ${metrics.iou.toFixed(3)}`)
    }
    if (typeof metrics.hausdorff_mean === 'number') {
        parts.push(`HD ${metrics.hausdorff_mean.toFixed(2)}`)
    }
    return parts.join(' ')
}
