// Thin typed client for the annotation service. The annotator id travels in
// the X-Annotator-Id header on every call, set once at the login screen.
export class ApiError extends Error {
    constructor(status, detail) {
        super(detail);
        this.status = status;
    }
}
export class ApiClient {
    constructor(annotatorId, baseUrl = '') {
        this.annotatorId = annotatorId;
        this.baseUrl = baseUrl;
    }
    async request(path, init) {
        const response = await fetch(`${this.baseUrl}${path}`, {
            ...init,
            headers: {
                'Content-Type': 'application/json',
                'X-Annotator-Id': this.annotatorId,
                ...(init?.headers ?? {}),
            },
        });
        if (!response.ok) {
            let detail = `${response.status} ${response.statusText}`;
            try {
                const body = (await response.json());
                if (typeof body.detail === 'string')
                    detail = body.detail;
            }
            catch {
                // non-JSON error body; keep the status line
            }
            throw new ApiError(response.status, detail);
        }
        return response.json();
    }
    getPlan() {
        return this.request(`/api/plan?annotator=${encodeURIComponent(this.annotatorId)}`);
    }
    getTask(feedbackId) {
        return this.request(`/api/task/${feedbackId}`);
    }
    submitAnnotation(feedbackId, verdicts, notes) {
        return this.request('/api/annotations', {
            method: 'POST',
            body: JSON.stringify({
                annotator_id: this.annotatorId,
                feedback_record_id: feedbackId,
                verdicts,
                notes: notes || null,
            }),
        });
    }
    getAgreement() {
        return this.request('/api/agreement');
    }
    postResolutions(resolutions) {
        return this.request('/api/resolutions', {
            method: 'POST',
            body: JSON.stringify({ resolutions }),
        });
    }
}
