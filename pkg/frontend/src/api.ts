// Thin typed client for the annotation service. The annotator id travels in
// the X-Annotator-Id header on every call, set once at the login screen.

import type {
  AgreementResponse,
  PlanResponse,
  ResolutionPayload,
  StoredAnnotation,
  TaskResponse,
  Verdict,
} from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail)
  }
}

export class ApiClient {
  constructor(
    private readonly annotatorId: string,
    private readonly baseUrl: string = '',
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      ...init,
      headers: {
        'Content-Type': 'application/json',
        'X-Annotator-Id': this.annotatorId,
        ...(init?.headers ?? {}),
      },
    })
    if (!response.ok) {
      let detail = `${response.status} ${response.statusText}`
      try {
        const body = (await response.json()) as { detail?: unknown }
        if (typeof body.detail === 'string') detail = body.detail
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, detail)
    }
    return response.json() as Promise<T>
  }

  getPlan(): Promise<PlanResponse> {
    return this.request(`/api/plan?annotator=${encodeURIComponent(this.annotatorId)}`)
  }

  getTask(feedbackId: string): Promise<TaskResponse> {
    return this.request(`/api/task/${feedbackId}`)
  }

  submitAnnotation(
    feedbackId: string,
    verdicts: Record<string, Verdict>,
    notes: string,
  ): Promise<StoredAnnotation> {
    return this.request('/api/annotations', {
      method: 'POST',
      body: JSON.stringify({
        annotator_id: this.annotatorId,
        feedback_record_id: feedbackId,
        verdicts,
        notes: notes || null,
      }),
    })
  }

  getAgreement(): Promise<AgreementResponse> {
    return this.request('/api/agreement')
  }

  postResolutions(resolutions: ResolutionPayload[]): Promise<{ items: number }> {
    return this.request('/api/resolutions', {
      method: 'POST',
      body: JSON.stringify({ resolutions }),
    })
  }
}
