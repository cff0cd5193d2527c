import { describe, expect, it } from 'vitest'
import { draftProblem, draftToBody, expectedStatus } from '../src/draft'
import type { AnnotationDraft } from '../src/types'

describe('draftProblem', () => {
  it('requires a dot for Dot drafts', () => {
    expect(draftProblem({ kind: 'Dot' })).toContain('dot')
    expect(draftProblem({ kind: 'Dot', dot: { x: 1, y: 2 } })).toBeNull()
  })

  it('requires a positive box for Box drafts', () => {
    expect(draftProblem({ kind: 'Box' })).toContain('box')
    expect(draftProblem({ kind: 'Box', box: { x: 0, y: 0, w: 0, h: 5 } })).toContain('positive')
    expect(draftProblem({ kind: 'Box', box: { x: 1, y: 2, w: 3, h: 4 } })).toBeNull()
  })

  it('requires non-blank text for Text drafts', () => {
    expect(draftProblem({ kind: 'Text', text: '   ' })).toContain('note')
    expect(draftProblem({ kind: 'Text', text: 'confirmed' })).toBeNull()
  })

  it('rejects fractional count deltas', () => {
    expect(draftProblem({ kind: 'Text', text: 'x', countDelta: 1.5 })).toContain('whole')
    expect(draftProblem({ kind: 'Text', text: 'x', countDelta: -2 })).toBeNull()
  })
})

describe('draftToBody', () => {
  it('serializes dot payloads as [x, y]', () => {
    const body = draftToBody({ kind: 'Dot', dot: { x: 3, y: 7 } })
    expect(body.payload).toEqual([3, 7])
  })

  it('serializes box payloads as [x, y, w, h]', () => {
    const body = draftToBody({ kind: 'Box', box: { x: 1, y: 2, w: 3, h: 4 } })
    expect(body.payload).toEqual([1, 2, 3, 4])
  })

  it('trims text and species', () => {
    const body = draftToBody({ kind: 'Text', text: ' ok ', species: ' coho ' })
    expect(body.payload).toBe('ok')
    expect(body.corrected_species).toBe('coho')
  })

  it('throws on invalid drafts', () => {
    expect(() => draftToBody({ kind: 'Dot' })).toThrow()
  })
})

describe('expectedStatus', () => {
  const text: AnnotationDraft = { kind: 'Text', text: 'ok' }

  it('text-only accepts', () => {
    expect(expectedStatus(text)).toBe('Accepted')
  })

  it('box, species or delta corrects', () => {
    expect(expectedStatus({ kind: 'Box', box: { x: 0, y: 0, w: 1, h: 1 } })).toBe('Corrected')
    expect(expectedStatus({ ...text, species: 'coho' })).toBe('Corrected')
    expect(expectedStatus({ ...text, countDelta: -1 })).toBe('Corrected')
  })

  it('explicit resolution wins', () => {
    expect(expectedStatus({ ...text, resolution: 'reject' })).toBe('Rejected')
    expect(expectedStatus({ ...text, resolution: 'correct' })).toBe('Corrected')
  })
})
