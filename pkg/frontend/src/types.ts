export interface Box {
  x: number
  y: number
  w: number
  h: number
}

export type ItemStatus = 'Pending' | 'Accepted' | 'Corrected' | 'Rejected'
export type AnnotationKind = 'Dot' | 'Box' | 'Text'

export interface QueueItem {
  item_id: string
  site_id: string
  reason: string
  status: ItemStatus
  confidence: number
  frame_file: string
  frame_index: number
  track_id: number
  created_at: string
}

export interface Annotation {
  item_id: string
  kind: AnnotationKind
  payload: unknown
  corrected_species: string | null
  corrected_count_delta: number | null
  author: string
  created_at: string
}

export interface ItemDetail extends QueueItem {
  box: [number, number, number, number]
  species_label: string
  direction: string | null
  corrected_box: [number, number, number, number] | null
  corrected_species: string | null
  resolved_at: string | null
  annotations: Annotation[]
}

export interface Counts {
  site_id: string
  upstream: number
  downstream: number
  net: number
  base_upstream: number
  base_downstream: number
}

/** In-progress expert input, in frame pixel coordinates. */
export interface AnnotationDraft {
  kind: AnnotationKind
  dot?: { x: number; y: number }
  box?: Box
  text?: string
  species?: string
  countDelta?: number
  resolution?: 'accept' | 'correct' | 'reject'
}
