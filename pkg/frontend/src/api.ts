/**
 * Typed client for the review service.
 *
 * Every request carries the shared operator token in the x-review-token
 * header. Non-2xx responses are surfaced as ApiError with the server's
 * detail string so validation messages can be shown inline.
 */

import type {
  EditBody,
  EditResponse,
  JobMeta,
  JobSummary,
  StagePayload,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl: string;
  token: string;
  fetchFn?: FetchLike;
}

async function readDetail(res: Response): Promise<string> {
  const text = await res.text();
  try {
    const parsed = JSON.parse(text);
    if (parsed && typeof parsed.detail === 'string') {
      return parsed.detail;
    }
  } catch {
    // not JSON, fall through to the raw body
  }
  return text || `http ${res.status}`;
}

export class ReviewClient {
  private readonly base: string;
  private readonly token: string;
  private readonly fetchFn: FetchLike;

  constructor(opts: ClientOptions) {
    this.base = opts.baseUrl.replace(/\/+$/, '');
    this.token = opts.token;
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
  }

  url(path: string): string {
    return this.base + path;
  }

  private async send(path: string, init: RequestInit = {}): Promise<Response> {
    const headers: Record<string, string> = { 'x-review-token': this.token };
    if (init.body !== undefined) {
      headers['content-type'] = 'application/json';
    }
    const res = await this.fetchFn(this.url(path), { ...init, headers });
    if (!res.ok) {
      throw new ApiError(res.status, await readDetail(res));
    }
    return res;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const res = await this.send(path, init);
    return (await res.json()) as T;
  }

  async listJobs(): Promise<JobSummary[]> {
    const body = await this.request<{ jobs: JobSummary[] }>('/jobs');
    return body.jobs;
  }

  createJob(body: {
    image: unknown;
    annotation: unknown;
    layout?: string;
  }): Promise<{ job_id: string }> {
    return this.request('/jobs', { method: 'POST', body: JSON.stringify(body) });
  }

  getJob(jobId: string): Promise<JobMeta> {
    return this.request(`/jobs/${jobId}`);
  }

  getStage<A>(jobId: string, stage: number): Promise<StagePayload<A>> {
    return this.request(`/jobs/${jobId}/stages/${stage}`);
  }

  getAnnotation(jobId: string): Promise<Record<string, unknown>> {
    return this.request(`/jobs/${jobId}/annotation`);
  }

  editStage(jobId: string, stage: number, body: EditBody): Promise<EditResponse> {
    return this.request(`/jobs/${jobId}/stages/${stage}/edits`, {
      method: 'POST',
      body: JSON.stringify(body),
    });
  }

  rerun(jobId: string): Promise<JobSummary> {
    return this.request(`/jobs/${jobId}/rerun`, { method: 'POST' });
  }

  /** Raw page image bytes (PNG). */
  async fetchImage(jobId: string): Promise<ArrayBuffer> {
    const res = await this.send(`/jobs/${jobId}/image`);
    return res.arrayBuffer();
  }

  /** Restored page bytes; throws ApiError 404 while stage 3 is pending. */
  async fetchRestored(jobId: string): Promise<ArrayBuffer> {
    const res = await this.send(`/jobs/${jobId}/restored`);
    return res.arrayBuffer();
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Poll job metadata until the predicate accepts it. Used to pick up
 * version bumps made elsewhere and to wait out reruns.
 */
export async function pollJob(
  client: ReviewClient,
  jobId: string,
  predicate: (meta: JobMeta) => boolean,
  opts: PollOptions = {},
): Promise<JobMeta> {
  const interval = opts.intervalMs ?? 500;
  const deadline = Date.now() + (opts.timeoutMs ?? 30000);
  for (;;) {
    const meta = await client.getJob(jobId);
    if (predicate(meta)) {
      return meta;
    }
    if (Date.now() >= deadline) {
      throw new Error(`timed out polling job ${jobId}`);
    }
    await delay(interval);
  }
}
