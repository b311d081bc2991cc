// Annotation session state, kept free of DOM concerns so the submission gate
// and queue behavior are testable headless.
// Toggles always start unset, never defaulted to yes or no, so lazy clicking
// cannot masquerade as agreement. Prior verdicts are loaded only when the
// annotator revisits an already-submitted item.
export function newTaskState(feedbackId, criterionCodes, prior) {
    const toggles = {};
    for (const code of criterionCodes) {
        toggles[code] = prior?.[code] ?? 'unset';
    }
    return { feedbackId, toggles, notes: '' };
}
export function setToggle(state, code, value) {
    if (!(code in state.toggles)) {
        throw new Error(`unknown criterion: ${code}`);
    }
    return { ...state, toggles: { ...state.toggles, [code]: value } };
}
export function canSubmit(state) {
    return Object.values(state.toggles).every((value) => value !== 'unset');
}
// The submit control mirrors this directly: disabled until every criterion
// has an explicit verdict.
export function submitDisabled(state) {
    return !canSubmit(state);
}
export function verdictsPayload(state) {
    const verdicts = {};
    for (const [code, value] of Object.entries(state.toggles)) {
        if (value === 'unset') {
            throw new Error(`criterion ${code} is not set`);
        }
        verdicts[code] = value;
    }
    return verdicts;
}
export class AnnotationQueue {
    constructor(items) {
        this.items = items.map((item) => ({ ...item }));
        this.cursor = this.firstPending(0);
    }
    firstPending(from) {
        for (let i = from; i < this.items.length; i++) {
            const item = this.items[i];
            if (item && !item.completed)
                return i;
        }
        return this.items.length;
    }
    current() {
        return this.items[this.cursor] ?? null;
    }
    progress() {
        return {
            done: this.items.filter((item) => item.completed).length,
            total: this.items.length,
        };
    }
    markCompleted(feedbackId) {
        const item = this.items.find((entry) => entry.feedback_id === feedbackId);
        if (item)
            item.completed = true;
    }
    advance() {
        this.cursor = this.firstPending(this.cursor);
        return this.current();
    }
    // Revisiting a completed item (to correct it) moves the cursor there.
    jumpTo(feedbackId) {
        const index = this.items.findIndex((entry) => entry.feedback_id === feedbackId);
        if (index === -1)
            return null;
        this.cursor = index;
        return this.current();
    }
    allDone() {
        return this.items.every((item) => item.completed);
    }
}
