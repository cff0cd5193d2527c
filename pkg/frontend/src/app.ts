import { ConflictError, ReviewApi } from './api'
import { draftProblem, draftToBody } from './draft'
import { canvasToFrame, drawBox, drawDot, dragToBox, scaleBox } from './overlay'
import { orderQueue } from './queue'
import type { AnnotationDraft, AnnotationKind, ItemDetail, QueueItem } from './types'

const api = new ReviewApi('')

const state = {
  site: 'default',
  statusFilter: 'Pending' as string,
  items: [] as QueueItem[],
  current: null as ItemDetail | null,
  draft: { kind: 'Text' } as AnnotationDraft,
  overlayOn: true,
  dragStart: null as { x: number; y: number } | null,
  frameImage: null as HTMLImageElement | null,
  submitting: false,
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function banner(message: string, isError = false): void {
  const box = el<HTMLDivElement>('banner')
  box.textContent = message
  box.className = isError ? 'banner error' : 'banner'
  box.style.display = message ? 'block' : 'none'
}

async function refreshCounts(): Promise<void> {
  try {
    const counts = await api.getCounts(state.site)
    el<HTMLSpanElement>('count-up').textContent = String(counts.upstream)
    el<HTMLSpanElement>('count-down').textContent = String(counts.downstream)
    el<HTMLSpanElement>('count-net').textContent = String(counts.net)
  } catch (err) {
    banner(`counts unavailable: ${(err as Error).message}`, true)
  }
}

async function refreshQueue(): Promise<void> {
  try {
    banner('')
    const status = state.statusFilter === 'All' ? undefined : state.statusFilter
    state.items = orderQueue(await api.loadQueue(state.site, status))
    renderQueue()
  } catch (err) {
    banner(`queue unavailable, retry in 5 s: ${(err as Error).message}`, true)
    setTimeout(refreshQueue, 5000)
  }
}

function renderQueue(): void {
  const list = el<HTMLUListElement>('queue')
  list.innerHTML = ''
  if (state.items.length === 0) {
    el<HTMLDivElement>('queue-empty').style.display = 'block'
    return
  }
  el<HTMLDivElement>('queue-empty').style.display = 'none'
  for (const item of state.items) {
    const row = document.createElement('li')
    row.className = state.current?.item_id === item.item_id ? 'selected' : ''
    row.innerHTML =
      `<span class="reason ${item.reason}">${item.reason}</span>` +
      `<span>track ${item.track_id} · frame ${item.frame_index}</span>` +
      `<span class="conf">conf ${item.confidence.toFixed(2)}</span>` +
      `<span class="status">${item.status}</span>`
    row.addEventListener('click', () => void openItem(item.item_id))
    list.appendChild(row)
  }
}

async function openItem(itemId: string): Promise<void> {
  try {
    state.current = await api.getItem(itemId)
    state.draft = { kind: 'Text' }
    state.dragStart = null
    state.frameImage = null
    el<HTMLButtonElement>('submit').disabled = false
    renderQueue()
    renderItem()
    loadFrame()
  } catch (err) {
    banner((err as Error).message, true)
  }
}

function loadFrame(): void {
  const item = state.current
  if (!item) return
  const name = item.frame_file.split('/').pop() || item.frame_file
  const image = new Image()
  image.onload = () => {
    state.frameImage = image
    renderCanvas()
  }
  image.onerror = () => {
    state.frameImage = null
    renderCanvas()
  }
  image.src = api.frameUrl(name, item.frame_index)
}

function canvasScale(): { sx: number; sy: number } {
  const canvas = el<HTMLCanvasElement>('frame')
  const image = state.frameImage
  if (!image) return { sx: 1, sy: 1 }
  return { sx: canvas.width / image.width, sy: canvas.height / image.height }
}

function renderCanvas(): void {
  const canvas = el<HTMLCanvasElement>('frame')
  const ctx = canvas.getContext('2d')
  if (!ctx) return
  ctx.clearRect(0, 0, canvas.width, canvas.height)
  const item = state.current
  if (!item) return
  if (state.frameImage) {
    ctx.imageSmoothingEnabled = false
    ctx.drawImage(state.frameImage, 0, 0, canvas.width, canvas.height)
  } else {
    ctx.fillStyle = '#223'
    ctx.fillRect(0, 0, canvas.width, canvas.height)
    ctx.fillStyle = '#99a'
    ctx.fillText('frame unavailable', 20, 30)
  }
  if (!state.overlayOn) return
  const { sx, sy } = canvasScale()
  const [x, y, w, h] = item.box
  drawBox(ctx, scaleBox({ x, y, w, h }, sx, sy), '#ffcc00')
  if (item.corrected_box) {
    const [cx, cy, cw, ch] = item.corrected_box
    drawBox(ctx, scaleBox({ x: cx, y: cy, w: cw, h: ch }, sx, sy), '#00e0a0')
  }
  if (state.draft.box) {
    drawBox(ctx, scaleBox(state.draft.box, sx, sy), '#ff5577')
  }
  if (state.draft.dot) {
    drawDot(ctx, state.draft.dot.x * sx, state.draft.dot.y * sy, '#ff5577')
  }
}

function renderItem(): void {
  const panel = el<HTMLDivElement>('detail')
  const item = state.current
  if (!item) {
    panel.style.display = 'none'
    return
  }
  panel.style.display = 'block'
  el<HTMLSpanElement>('detail-title').textContent =
    `${item.reason} · track ${item.track_id} · frame ${item.frame_index} · ${item.status}`
  el<HTMLSpanElement>('detail-species').textContent = item.species_label
  renderDraftProblem()
  renderCanvas()
}

function renderDraftProblem(): void {
  const problem = draftProblem(state.draft)
  el<HTMLSpanElement>('draft-problem').textContent = problem ?? ''
  el<HTMLButtonElement>('submit').disabled =
    problem !== null || state.submitting || state.current?.status !== 'Pending'
}

function readDraftInputs(): void {
  state.draft.kind = el<HTMLSelectElement>('kind').value as AnnotationKind
  state.draft.text = el<HTMLInputElement>('note').value
  state.draft.species = el<HTMLInputElement>('species').value
  const delta = el<HTMLInputElement>('delta').value
  state.draft.countDelta = delta === '' ? undefined : Number(delta)
  const res = el<HTMLSelectElement>('resolution').value
  state.draft.resolution = res === 'auto' ? undefined : (res as AnnotationDraft['resolution'])
  renderDraftProblem()
  renderCanvas()
}

async function submit(): Promise<void> {
  const item = state.current
  if (!item || state.submitting) return
  state.submitting = true
  el<HTMLButtonElement>('submit').disabled = true
  try {
    const updated = await api.submitAnnotation(item.item_id, draftToBody(state.draft))
    state.current = updated
    banner(`item ${updated.item_id} → ${updated.status}`)
    await refreshQueue()
    await refreshCounts()
    renderItem()
  } catch (err) {
    if (err instanceof ConflictError) {
      banner(`already resolved elsewhere: ${err.message}`, true)
      await refreshQueue()
      if (state.current) await openItem(state.current.item_id)
    } else {
      banner((err as Error).message, true)
      el<HTMLButtonElement>('submit').disabled = false
    }
  } finally {
    state.submitting = false
    renderDraftProblem()
  }
}

function wireCanvas(): void {
  const canvas = el<HTMLCanvasElement>('frame')
  canvas.addEventListener('mousedown', (event) => {
    if (state.draft.kind !== 'Box') return
    const rect = canvas.getBoundingClientRect()
    state.dragStart = { x: event.clientX - rect.left, y: event.clientY - rect.top }
  })
  canvas.addEventListener('mouseup', (event) => {
    const rect = canvas.getBoundingClientRect()
    const px = event.clientX - rect.left
    const py = event.clientY - rect.top
    const { sx, sy } = canvasScale()
    if (state.draft.kind === 'Dot') {
      state.draft.dot = canvasToFrame(px, py, sx, sy)
    } else if (state.draft.kind === 'Box' && state.dragStart) {
      const box = dragToBox(state.dragStart.x, state.dragStart.y, px, py)
      state.draft.box = scaleBox(box, 1 / sx, 1 / sy)
      state.dragStart = null
    }
    renderDraftProblem()
    renderCanvas()
  })
}

export function start(): void {
  el<HTMLSelectElement>('status-filter').addEventListener('change', (event) => {
    state.statusFilter = (event.target as HTMLSelectElement).value
    void refreshQueue()
  })
  el<HTMLInputElement>('site').addEventListener('change', (event) => {
    state.site = (event.target as HTMLInputElement).value || 'default'
    void refreshQueue()
    void refreshCounts()
  })
  el<HTMLInputElement>('overlay-toggle').addEventListener('change', (event) => {
    state.overlayOn = (event.target as HTMLInputElement).checked
    renderCanvas()
  })
  for (const id of ['kind', 'note', 'species', 'delta', 'resolution']) {
    el(id).addEventListener('input', readDraftInputs)
    el(id).addEventListener('change', readDraftInputs)
  }
  el<HTMLButtonElement>('submit').addEventListener('click', () => void submit())
  el<HTMLButtonElement>('refresh').addEventListener('click', () => {
    void refreshQueue()
    void refreshCounts()
  })
  wireCanvas()
  void refreshQueue()
  void refreshCounts()
}

if (typeof document !== 'undefined' && document.getElementById('queue')) {
  start()
}
