import type { Counts, ItemDetail, QueueItem } from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ConflictError extends Error {
  constructor(detail: string) {
    super(detail)
    this.name = 'ConflictError'
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`)
    this.name = 'ApiError'
  }
}

export interface AnnotationBody {
  kind: string
  payload: unknown
  corrected_species?: string | null
  corrected_count_delta?: number | null
  author?: string
  resolution?: string | null
}

/** Thin typed client over the review service; fetch is injectable so tests
 * can stub the network. */
export class ReviewApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init)
    if (response.status === 409) {
      const body = await response.json().catch(() => ({ detail: 'conflict' }))
      throw new ConflictError(body.detail ?? 'conflict')
    }
    if (!response.ok) {
      const body = await response.json().catch(() => ({ detail: response.statusText }))
      throw new ApiError(response.status, body.detail ?? response.statusText)
    }
    return (await response.json()) as T
  }

  async loadQueue(site?: string, status?: string): Promise<QueueItem[]> {
    const params = new URLSearchParams()
    if (site) params.set('site', site)
    if (status) params.set('status', status)
    const query = params.toString()
    const data = await this.request<{ items: QueueItem[] }>(`/api/queue${query ? '?' + query : ''}`)
    return data.items
  }

  getItem(itemId: string): Promise<ItemDetail> {
    return this.request<ItemDetail>(`/api/items/${itemId}`)
  }

  submitAnnotation(itemId: string, body: AnnotationBody): Promise<ItemDetail> {
    return this.request<ItemDetail>(`/api/items/${itemId}/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
  }

  getCounts(site: string): Promise<Counts> {
    return this.request<Counts>(`/api/counts?site=${encodeURIComponent(site)}`)
  }

  frameUrl(frameFile: string, frameIndex: number): string {
    return `${this.baseUrl}/api/frames/${encodeURIComponent(frameFile)}/${frameIndex}`
  }
}
