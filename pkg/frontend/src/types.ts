// Payload shapes of the annotation service API.

export interface PlanItem {
  feedback_id: string
  completed: boolean
}

export interface PlanResponse {
  annotator: string
  items: PlanItem[]
}

export interface CriterionInfo {
  code: string
  name: string
  description: string
}

export interface TestCaseInfo {
  id: string
  invocation?: string
  expected?: string
  assertion?: string
}

export interface TaskResponse {
  feedback_id: string
  problem_description: string
  test_cases: TestCaseInfo[]
  buggy_program: string
  ground_truth_bugs: string[]
  ground_truth_fixes: string[]
  feedback_text: string
  criteria: CriterionInfo[]
}

export type Verdict = 'yes' | 'no'

export interface StoredAnnotation {
  annotator_id: string
  feedback_record_id: string
  verdicts: Record<string, Verdict>
  notes: string | null
  submitted_at: string
  revision: number
}

export interface Conflict {
  feedback_record_id: string
  criterion: string
  verdicts: Record<string, Verdict>
}

export interface AgreementReport {
  p_o: number
  p_e: number
  kappa: number
  per_criterion_kappa: Record<string, number>
  n_items: number
}

export interface AgreementResponse {
  report: AgreementReport
  conflicts: Conflict[]
}

export interface ResolutionPayload {
  feedback_record_id: string
  criterion: string
  verdict: Verdict
}
