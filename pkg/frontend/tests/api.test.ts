import { describe, expect, it } from 'vitest';

import { ApiError, ReviewClient, pollJob } from '../src/api.js';
import type { FetchLike } from '../src/api.js';

interface Call {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | null;
}

function fakeFetch(responses: Response[]): { fetchFn: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const queue = [...responses];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? 'GET',
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof init?.body === 'string' ? init.body : null,
    });
    const next = queue.shift();
    if (!next) {
      throw new Error('fake fetch queue exhausted');
    }
    return next;
  };
  return { fetchFn, calls };
}

function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

function client(fetchFn: FetchLike, baseUrl = 'http://svc:9') {
  return new ReviewClient({ baseUrl, token: 'tok-1', fetchFn });
}

async function apiError(p: Promise<unknown>): Promise<ApiError> {
  try {
    await p;
  } catch (err) {
    if (err instanceof ApiError) {
      return err;
    }
    throw err;
  }
  throw new Error('expected the call to fail');
}

describe('ReviewClient', () => {
  it('sends the token header on every request', async () => {
    const { fetchFn, calls } = fakeFetch([json(200, { jobs: [] })]);
    await client(fetchFn).listJobs();
    expect(calls[0].headers['x-review-token']).toBe('tok-1');
    expect(calls[0].url).toBe('http://svc:9/jobs');
    expect(calls[0].headers['content-type']).toBeUndefined();
  });

  it('normalizes a trailing slash in the base url', async () => {
    const { fetchFn, calls } = fakeFetch([json(200, { jobs: [] })]);
    await client(fetchFn, 'http://svc:9/').listJobs();
    expect(calls[0].url).toBe('http://svc:9/jobs');
  });

  it('posts edits as json with content type set', async () => {
    const { fetchFn, calls } = fakeFetch([
      json(200, { job_id: 'j', version: 4, conflict: false, stages: {} }),
    ]);
    const resp = await client(fetchFn).editStage('j', 2, {
      expected_version: 3,
      selections: [{ slot: 1, label: 'Z' }],
    });
    expect(resp.version).toBe(4);
    expect(calls[0].method).toBe('POST');
    expect(calls[0].url).toBe('http://svc:9/jobs/j/stages/2/edits');
    expect(calls[0].headers['content-type']).toBe('application/json');
    expect(JSON.parse(calls[0].body ?? '')).toEqual({
      expected_version: 3,
      selections: [{ slot: 1, label: 'Z' }],
    });
  });

  it('unwraps the jobs list and stage payloads', async () => {
    const summary = { job_id: 'j', version: 3, updated_at: 't', stages: { '1': 'done' } };
    const stage = { job_id: 'j', stage: 2, status: 'pending', error: null, version: 3, artifact: null, detail: 'not yet computed' };
    const { fetchFn } = fakeFetch([json(200, { jobs: [summary] }), json(200, stage)]);
    const c = client(fetchFn);
    expect(await c.listJobs()).toEqual([summary]);
    const payload = await c.getStage('j', 2);
    expect(payload.artifact).toBeNull();
    expect(payload.detail).toBe('not yet computed');
  });

  it('rerun posts to the rerun endpoint', async () => {
    const { fetchFn, calls } = fakeFetch([
      json(200, { job_id: 'j', version: 6, updated_at: 't', stages: {} }),
    ]);
    await client(fetchFn).rerun('j');
    expect(calls[0].url).toBe('http://svc:9/jobs/j/rerun');
    expect(calls[0].method).toBe('POST');
  });

  it('surfaces the server detail string on errors', async () => {
    const { fetchFn } = fakeFetch([json(401, { detail: 'invalid or missing token' })]);
    const err = await apiError(client(fetchFn).listJobs());
    expect(err.status).toBe(401);
    expect(err.message).toBe('invalid or missing token');
  });

  it('falls back to the raw body, then a generic message', async () => {
    const { fetchFn } = fakeFetch([
      new Response('gateway exploded', { status: 502 }),
      new Response('', { status: 500 }),
    ]);
    const c = client(fetchFn);
    expect((await apiError(c.listJobs())).message).toBe('gateway exploded');
    expect((await apiError(c.listJobs())).message).toBe('http 500');
  });

  it('fetches binary artifacts as array buffers', async () => {
    const bytes = new Uint8Array([0x89, 0x50, 0x4e, 0x47]);
    const { fetchFn, calls } = fakeFetch([new Response(bytes, { status: 200 })]);
    const buf = await client(fetchFn).fetchImage('j');
    expect(new Uint8Array(buf)).toEqual(bytes);
    expect(calls[0].url).toBe('http://svc:9/jobs/j/image');
  });

  it('a pending restored image surfaces as ApiError 404', async () => {
    const { fetchFn } = fakeFetch([json(404, { detail: 'restored image not yet computed' })]);
    const err = await apiError(client(fetchFn).fetchRestored('j'));
    expect(err.status).toBe(404);
    expect(err.message).toMatch(/not yet computed/);
  });
});

describe('pollJob', () => {
  const metaBody = (version: number) => ({
    schema_version: 1,
    job_id: 'j',
    created_at: 't',
    updated_at: 't',
    version,
    width: 10,
    height: 10,
    layout: 'vertical-rtl',
    files: {},
    stages: {},
  });

  it('resolves once the predicate accepts the metadata', async () => {
    const { fetchFn, calls } = fakeFetch([
      json(200, metaBody(3)),
      json(200, metaBody(3)),
      json(200, metaBody(5)),
    ]);
    const meta = await pollJob(client(fetchFn), 'j', (m) => m.version >= 5, {
      intervalMs: 1,
      timeoutMs: 2000,
    });
    expect(meta.version).toBe(5);
    expect(calls).toHaveLength(3);
  });

  it('gives up after the timeout', async () => {
    const responses = Array.from({ length: 50 }, () => json(200, metaBody(1)));
    const { fetchFn } = fakeFetch(responses);
    await expect(
      pollJob(client(fetchFn), 'j', (m) => m.version > 1, { intervalMs: 1, timeoutMs: 20 }),
    ).rejects.toThrow(/timed out/);
  });
});
