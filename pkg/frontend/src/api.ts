// Thin client for the review API. The bearer token lives in memory only;
// reloading the page means entering it again.

import type { PrecisionReport, QueueItem, QueueResponse, VerdictResponse, VerdictValue } from './types';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string | null,
    message?: string,
  ) {
    super(message ?? `API error ${status}${code ? ` (${code})` : ''}`);
    this.name = 'ApiError';
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let code: string | null = null;
  let detail: string | undefined;
  try {
    const body = (await response.json()) as { code?: string; detail?: string };
    code = body.code ?? null;
    detail = body.detail;
  } catch {
    // non-JSON error body; status alone will have to do
  }
  return new ApiError(response.status, code, detail);
}

export class ApiClient {
  private token: string | null = null;

  constructor(private readonly baseUrl: string = '') {}

  setToken(token: string | null): void {
    this.token = token && token.length > 0 ? token : null;
  }

  private headers(json = false): Record<string, string> {
    const headers: Record<string, string> = {};
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    if (json) headers['Content-Type'] = 'application/json';
    return headers;
  }

  /** The active review queue, or null when no sample has been drawn yet. */
  async fetchQueue(): Promise<QueueItem[] | null> {
    const response = await fetch(`${this.baseUrl}/api/queue`, { headers: this.headers() });
    if (response.status === 404) return null;
    if (!response.ok) throw await errorFrom(response);
    const body = (await response.json()) as QueueResponse;
    return body.items;
  }

  /** Current precision report, or null until a decisive verdict exists. */
  async fetchPrecision(): Promise<PrecisionReport | null> {
    const response = await fetch(`${this.baseUrl}/api/reports/precision`, { headers: this.headers() });
    if (response.status === 404) return null;
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as PrecisionReport;
  }

  async postVerdict(repoId: string, analyst: string, verdict: VerdictValue): Promise<VerdictResponse> {
    const response = await fetch(`${this.baseUrl}/api/verdicts`, {
      method: 'POST',
      headers: this.headers(true),
      body: JSON.stringify({ repo_id: repoId, analyst, verdict }),
    });
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as VerdictResponse;
  }
}
