// Annotation session state, kept free of DOM concerns so the submission gate
// and queue behavior are testable headless.

import type { PlanItem, Verdict } from './types.js'

export type Toggle = Verdict | 'unset'

export interface TaskState {
  feedbackId: string
  toggles: Record<string, Toggle>
  notes: string
}

// Toggles always start unset, never defaulted to yes or no, so lazy clicking
// cannot masquerade as agreement. Prior verdicts are loaded only when the
// annotator revisits an already-submitted item.
export function newTaskState(
  feedbackId: string,
  criterionCodes: string[],
  prior?: Record<string, Verdict>,
): TaskState {
  const toggles: Record<string, Toggle> = {}
  for (const code of criterionCodes) {
    toggles[code] = prior?.[code] ?? 'unset'
  }
  return { feedbackId, toggles, notes: '' }
}

export function setToggle(state: TaskState, code: string, value: Toggle): TaskState {
  if (!(code in state.toggles)) {
    throw new Error(`unknown criterion: ${code}`)
  }
  return { ...state, toggles: { ...state.toggles, [code]: value } }
}

export function canSubmit(state: TaskState): boolean {
  return Object.values(state.toggles).every((value) => value !== 'unset')
}

// The submit control mirrors this directly: disabled until every criterion
// has an explicit verdict.
export function submitDisabled(state: TaskState): boolean {
  return !canSubmit(state)
}

export function verdictsPayload(state: TaskState): Record<string, Verdict> {
  const verdicts: Record<string, Verdict> = {}
  for (const [code, value] of Object.entries(state.toggles)) {
    if (value === 'unset') {
      throw new Error(`criterion ${code} is not set`)
    }
    verdicts[code] = value
  }
  return verdicts
}

export interface Progress {
  done: number
  total: number
}

export class AnnotationQueue {
  private items: PlanItem[]
  private cursor: number

  constructor(items: PlanItem[]) {
    this.items = items.map((item) => ({ ...item }))
    this.cursor = this.firstPending(0)
  }

  private firstPending(from: number): number {
    for (let i = from; i < this.items.length; i++) {
      const item = this.items[i]
      if (item && !item.completed) return i
    }
    return this.items.length
  }

  current(): PlanItem | null {
    return this.items[this.cursor] ?? null
  }

  progress(): Progress {
    return {
      done: this.items.filter((item) => item.completed).length,
      total: this.items.length,
    }
  }

  markCompleted(feedbackId: string): void {
    const item = this.items.find((entry) => entry.feedback_id === feedbackId)
    if (item) item.completed = true
  }

  advance(): PlanItem | null {
    this.cursor = this.firstPending(this.cursor)
    return this.current()
  }

  // Revisiting a completed item (to correct it) moves the cursor there.
  jumpTo(feedbackId: string): PlanItem | null {
    const index = this.items.findIndex((entry) => entry.feedback_id === feedbackId)
    if (index === -1) return null
    this.cursor = index
    return this.current()
  }

  allDone(): boolean {
    return this.items.every((item) => item.completed)
  }
}
