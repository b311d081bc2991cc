// Conflict review session: pick a resolution for every (item, criterion)
// disagreement, then post the complete batch.

import type { Conflict, ResolutionPayload, Verdict } from './types.js'

export interface ReviewState {
  conflicts: Conflict[]
  chosen: Map<string, Verdict>
}

export function conflictKey(conflict: Conflict): string {
  return `${conflict.feedback_record_id}::${conflict.criterion}`
}

export function newReviewState(conflicts: Conflict[]): ReviewState {
  return { conflicts, chosen: new Map() }
}

export function choose(state: ReviewState, conflict: Conflict, verdict: Verdict): ReviewState {
  const chosen = new Map(state.chosen)
  chosen.set(conflictKey(conflict), verdict)
  return { ...state, chosen }
}

export function reviewComplete(state: ReviewState): boolean {
  return state.conflicts.every((conflict) => state.chosen.has(conflictKey(conflict)))
}

export function resolutionsPayload(state: ReviewState): ResolutionPayload[] {
  if (!reviewComplete(state)) {
    throw new Error('every conflict needs a resolution before submitting')
  }
  return state.conflicts.map((conflict) => ({
    feedback_record_id: conflict.feedback_record_id,
    criterion: conflict.criterion,
    verdict: state.chosen.get(conflictKey(conflict)) as Verdict,
  }))
}

// The service rejects resolutions that no longer match its conflict list
// (somebody re-annotated in the meantime); that answer means refresh, not retry.
export function isStaleResolutionError(detail: string): boolean {
  return detail.includes('non-conflicting') || detail.includes('unresolved')
}
