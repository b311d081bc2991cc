// Single-page annotation app: login, task-by-task verdict entry, conflict review.

import { ApiClient, ApiError } from './api.js'
import { highlightPython } from './highlight.js'
import {
  choose,
  isStaleResolutionError,
  newReviewState,
  resolutionsPayload,
  reviewComplete,
  type ReviewState,
} from './review.js'
import {
  AnnotationQueue,
  newTaskState,
  setToggle,
  submitDisabled,
  verdictsPayload,
  type TaskState,
  type Toggle,
} from './state.js'
import type { Conflict, PlanItem, TaskResponse, Verdict } from './types.js'

type PlanItemWithVerdicts = PlanItem & { verdicts?: Record<string, Verdict>; notes?: string | null }

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild)
}

export class App {
  private client!: ApiClient
  private queue!: AnnotationQueue
  private planItems: PlanItemWithVerdicts[] = []
  private task: TaskState | null = null
  private readonly root: HTMLElement

  constructor(root: HTMLElement) {
    this.root = root
  }

  start(): void {
    this.renderLogin()
  }

  private renderLogin(): void {
    clear(this.root)
    const box = el('div', 'login')
    box.appendChild(el('h1', undefined, 'Feedback annotation'))
    const label = el('label', undefined, 'Annotator id')
    const input = el('input')
    input.id = 'annotator-id'
    label.appendChild(input)
    box.appendChild(label)
    const button = el('button', 'primary', 'Start annotating')
    button.onclick = () => {
      const annotator = input.value.trim()
      if (!annotator) return
      this.client = new ApiClient(annotator)
      void this.loadPlan()
    }
    box.appendChild(button)
    const review = el('button', undefined, 'Review conflicts')
    review.onclick = () => {
      this.client = new ApiClient(input.value.trim() || 'reviewer')
      void this.renderReview()
    }
    box.appendChild(review)
    this.root.appendChild(box)
  }

  private async loadPlan(): Promise<void> {
    try {
      const plan = await this.client.getPlan()
      this.planItems = plan.items as PlanItemWithVerdicts[]
      this.queue = new AnnotationQueue(plan.items)
      await this.showCurrentTask()
    } catch (error) {
      this.renderFatal(error)
    }
  }

  private async showCurrentTask(): Promise<void> {
    const current = this.queue.current()
    if (!current) {
      this.renderAllDone()
      return
    }
    try {
      const task = await this.client.getTask(current.feedback_id)
      const prior = this.planItems.find((p) => p.feedback_id === current.feedback_id)?.verdicts
      this.task = newTaskState(task.feedback_id, task.criteria.map((c) => c.code), prior)
      this.renderTask(task)
    } catch (error) {
      this.renderFatal(error)
    }
  }

  private renderTask(task: TaskResponse): void {
    clear(this.root)
    const page = el('div', 'task')
    const progress = this.queue.progress()
    page.appendChild(el('div', 'progress', `${progress.done} / ${progress.total} annotated`))
    page.appendChild(el('h1', undefined, task.feedback_id))

    page.appendChild(el('h2', undefined, 'Problem'))
    page.appendChild(el('p', 'problem', task.problem_description))

    page.appendChild(el('h2', undefined, 'Test cases'))
    const tests = el('ul', 'tests')
    for (const test of task.test_cases) {
      const text = test.assertion ?? `${test.invocation} == ${test.expected}`
      tests.appendChild(el('li', undefined, text))
    }
    page.appendChild(tests)

    page.appendChild(el('h2', undefined, 'Student program'))
    const code = el('pre', 'code')
    code.innerHTML = highlightPython(task.buggy_program)
    page.appendChild(code)

    page.appendChild(el('h2', undefined, 'Ground truth'))
    const truth = el('div', 'truth')
    const bugs = el('ul')
    for (const bug of task.ground_truth_bugs) bugs.appendChild(el('li', undefined, bug))
    const fixes = el('ul')
    for (const fix of task.ground_truth_fixes) fixes.appendChild(el('li', undefined, fix))
    truth.appendChild(el('h3', undefined, 'Bugs'))
    truth.appendChild(bugs)
    truth.appendChild(el('h3', undefined, 'Fixes'))
    truth.appendChild(fixes)
    page.appendChild(truth)

    page.appendChild(el('h2', undefined, 'Model feedback to grade'))
    page.appendChild(el('pre', 'feedback', task.feedback_text))

    page.appendChild(el('h2', undefined, 'Verdicts'))
    const grid = el('div', 'criteria')
    const submit = el('button', 'primary', 'Submit annotation')
    submit.id = 'submit'
    const refreshSubmit = () => {
      submit.disabled = this.task === null || submitDisabled(this.task)
    }
    for (const criterion of task.criteria) {
      const row = el('div', 'criterion')
      const title = el('div', 'criterion-title', `${criterion.code} - ${criterion.name}`)
      row.appendChild(title)
      row.appendChild(el('div', 'criterion-desc', criterion.description))
      const buttons = el('div', 'toggle')
      for (const value of ['yes', 'no'] as const) {
        const button = el('button', 'toggle-option', value)
        button.dataset['criterion'] = criterion.code
        button.dataset['value'] = value
        button.onclick = () => {
          if (!this.task) return
          this.task = setToggle(this.task, criterion.code, value as Toggle)
          for (const sibling of Array.from(buttons.children) as HTMLButtonElement[]) {
            sibling.classList.toggle('selected', sibling.dataset['value'] === value)
          }
          refreshSubmit()
        }
        if (this.task?.toggles[criterion.code] === value) button.classList.add('selected')
        buttons.appendChild(button)
      }
      row.appendChild(buttons)
      grid.appendChild(row)
    }
    page.appendChild(grid)

    const notesLabel = el('label', undefined, 'Notes (optional)')
    const notes = el('textarea')
    notes.id = 'notes'
    notes.oninput = () => {
      if (this.task) this.task = { ...this.task, notes: notes.value }
    }
    notesLabel.appendChild(notes)
    page.appendChild(notesLabel)

    const banner = el('div', 'banner')
    banner.id = 'error-banner'
    banner.hidden = true
    page.appendChild(banner)

    refreshSubmit()
    submit.onclick = () => void this.submitCurrent(banner, submit)
    page.appendChild(submit)
    this.root.appendChild(page)
  }

  // On rejection the entered toggles stay as they are; the banner offers retry.
  private async submitCurrent(banner: HTMLElement, submit: HTMLButtonElement): Promise<void> {
    if (!this.task) return
    submit.disabled = true
    try {
      const stored = await this.client.submitAnnotation(
        this.task.feedbackId,
        verdictsPayload(this.task),
        this.task.notes,
      )
      this.queue.markCompleted(stored.feedback_record_id)
      banner.hidden = true
      this.queue.advance()
      await this.showCurrentTask()
    } catch (error) {
      banner.hidden = false
      banner.textContent =
        error instanceof ApiError
          ? `Submission rejected (${error.status}): ${error.message} - your verdicts are preserved, retry when ready.`
          : `Network failure: ${String(error)} - your verdicts are preserved, retry when ready.`
      submit.disabled = false
    }
  }

  private renderAllDone(): void {
    clear(this.root)
    const box = el('div', 'done')
    box.appendChild(el('h1', undefined, 'Queue complete'))
    box.appendChild(el('p', undefined, 'Every assigned item is annotated.'))
    const review = el('button', 'primary', 'Open conflict review')
    review.onclick = () => void this.renderReview()
    box.appendChild(review)
    this.root.appendChild(box)
  }

  private async renderReview(): Promise<void> {
    clear(this.root)
    const page = el('div', 'review')
    page.appendChild(el('h1', undefined, 'Agreement and conflicts'))
    try {
      const agreement = await this.client.getAgreement()
      page.appendChild(
        el(
          'p',
          'kappa',
          `Cohen's kappa over ${agreement.report.n_items} calibration items: ` +
            agreement.report.kappa.toFixed(2),
        ),
      )
      if (agreement.conflicts.length === 0) {
        page.appendChild(el('p', undefined, 'No conflicts to resolve.'))
        this.root.appendChild(page)
        return
      }
      let review = newReviewState(agreement.conflicts)
      const submit = el('button', 'primary', 'Submit resolutions')
      submit.id = 'submit-resolutions'
      submit.disabled = true
      const table = el('div', 'conflicts')
      for (const conflict of agreement.conflicts) {
        table.appendChild(this.renderConflictRow(conflict, (verdict) => {
          review = choose(review, conflict, verdict)
          submit.disabled = !reviewComplete(review)
        }))
      }
      page.appendChild(table)
      const banner = el('div', 'banner')
      banner.hidden = true
      page.appendChild(banner)
      submit.onclick = async () => {
        try {
          const result = await this.client.postResolutions(resolutionsPayload(review))
          clear(page)
          page.appendChild(el('h1', undefined, 'Gold labels written'))
          page.appendChild(el('p', undefined, `${result.items} items resolved into gold labels.`))
        } catch (error) {
          banner.hidden = false
          banner.textContent =
            error instanceof ApiError && isStaleResolutionError(error.message)
              ? 'The conflict list changed on the server; reload this page to refresh it.'
              : `Submission failed: ${String(error)}`
        }
      }
      page.appendChild(submit)
    } catch (error) {
      page.appendChild(el('p', 'banner', `Agreement not available yet: ${String(error)}`))
    }
    this.root.appendChild(page)
  }

  private renderConflictRow(conflict: Conflict, onChoice: (verdict: Verdict) => void): HTMLElement {
    const row = el('div', 'conflict')
    row.appendChild(el('div', 'conflict-item', `${conflict.feedback_record_id} / ${conflict.criterion}`))
    const sides = el('div', 'conflict-sides')
    for (const [annotator, verdict] of Object.entries(conflict.verdicts)) {
      sides.appendChild(el('span', 'side', `${annotator}: ${verdict}`))
    }
    row.appendChild(sides)
    const buttons = el('div', 'toggle')
    for (const value of ['yes', 'no'] as const) {
      const button = el('button', 'toggle-option', `resolve ${value}`)
      button.onclick = () => {
        for (const sibling of Array.from(buttons.children) as HTMLButtonElement[]) {
          sibling.classList.toggle('selected', sibling === button)
        }
        onChoice(value)
      }
      buttons.appendChild(button)
    }
    row.appendChild(buttons)
    return row
  }

  private renderFatal(error: unknown): void {
    clear(this.root)
    const box = el('div', 'banner')
    box.textContent = `Cannot reach the annotation service: ${String(error)}`
    this.root.appendChild(box)
  }
}

if (typeof document !== 'undefined') {
  const root = document.getElementById('app')
  if (root) new App(root).start()
}
