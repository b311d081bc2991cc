// Conflict review session: pick a resolution for every (item, criterion)
// disagreement, then post the complete batch.
export function conflictKey(conflict) {
    return `${conflict.feedback_record_id}::${conflict.criterion}`;
}
export function newReviewState(conflicts) {
    return { conflicts, chosen: new Map() };
}
export function choose(state, conflict, verdict) {
    const chosen = new Map(state.chosen);
    chosen.set(conflictKey(conflict), verdict);
    return { ...state, chosen };
}
export function reviewComplete(state) {
    return state.conflicts.every((conflict) => state.chosen.has(conflictKey(conflict)));
}
export function resolutionsPayload(state) {
    if (!reviewComplete(state)) {
        throw new Error('every conflict needs a resolution before submitting');
    }
    return state.conflicts.map((conflict) => ({
        feedback_record_id: conflict.feedback_record_id,
        criterion: conflict.criterion,
        verdict: state.chosen.get(conflictKey(conflict)),
    }));
}
// The service rejects resolutions that no longer match its conflict list
// (somebody re-annotated in the meantime); that answer means refresh, not retry.
export function isStaleResolutionError(detail) {
    return detail.includes('non-conflicting') || detail.includes('unresolved');
}
