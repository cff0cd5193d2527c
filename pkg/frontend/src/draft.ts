import type { AnnotationBody } from './api'
import type { AnnotationDraft } from './types'

/** Why submission is disabled, or null when the draft is submittable. */
export function draftProblem(draft: AnnotationDraft): string | null {
  switch (draft.kind) {
    case 'Dot':
      if (!draft.dot) return 'place a dot on the frame'
      break
    case 'Box':
      if (!draft.box) return 'drag a box on the frame'
      if (draft.box.w <= 0 || draft.box.h <= 0) return 'box must have positive size'
      break
    case 'Text':
      if (!draft.text || draft.text.trim() === '') return 'enter a note'
      break
  }
  if (draft.countDelta !== undefined && !Number.isInteger(draft.countDelta)) {
    return 'count delta must be a whole number'
  }
  return null
}

export function draftToBody(draft: AnnotationDraft): AnnotationBody {
  const problem = draftProblem(draft)
  if (problem) throw new Error(problem)
  let payload: unknown
  if (draft.kind === 'Dot') {
    payload = [draft.dot!.x, draft.dot!.y]
  } else if (draft.kind === 'Box') {
    const b = draft.box!
    payload = [b.x, b.y, b.w, b.h]
  } else {
    payload = draft.text!.trim()
  }
  return {
    kind: draft.kind,
    payload,
    corrected_species: draft.species?.trim() || null,
    corrected_count_delta: draft.countDelta ?? null,
    resolution: draft.resolution ?? null,
  }
}

/** Mirror of the server's inference: does this draft correct anything? */
export function expectedStatus(draft: AnnotationDraft): 'Accepted' | 'Corrected' | 'Rejected' {
  if (draft.resolution === 'reject') return 'Rejected'
  if (draft.resolution === 'correct') return 'Corrected'
  const changes =
    draft.kind === 'Box' || Boolean(draft.species?.trim()) || Boolean(draft.countDelta)
  return changes ? 'Corrected' : 'Accepted'
}
