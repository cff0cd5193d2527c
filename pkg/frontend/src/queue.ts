import type { QueueItem } from './types'

/** Queue rows ordered oldest-first, matching server semantics; applied
 * client-side as well so optimistic updates keep a stable order. */
export function orderQueue(items: QueueItem[]): QueueItem[] {
  return [...items].sort((a, b) =>
    a.created_at === b.created_at
      ? a.item_id.localeCompare(b.item_id)
      : a.created_at.localeCompare(b.created_at),
  )
}

export function filterQueue(
  items: QueueItem[],
  site: string | null,
  status: string | null,
): QueueItem[] {
  return items.filter(
    (item) =>
      (site === null || item.site_id === site) && (status === null || item.status === status),
  )
}

/** Drop an item from the pending list after it resolves elsewhere. */
export function withoutItem(items: QueueItem[], itemId: string): QueueItem[] {
  return items.filter((item) => item.item_id !== itemId)
}

export function summarize(items: QueueItem[]): { pending: number; byReason: Record<string, number> } {
  const byReason: Record<string, number> = {}
  let pending = 0
  for (const item of items) {
    if (item.status === 'Pending') pending += 1
    byReason[item.reason] = (byReason[item.reason] ?? 0) + 1
  }
  return { pending, byReason }
}
