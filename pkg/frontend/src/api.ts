import type { DecisionAck, DecisionPayload, Progress, QueueNext } from './types';

export interface ReviewApi {
  fetchNext(reviewer: string): Promise<QueueNext>;
  submitDecision(payload: DecisionPayload): Promise<DecisionAck>;
  fetchProgress(): Promise<Progress>;
  imageUrl(path: string): string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** HTTP client for the review service; all state lives server-side. */
export class HttpReviewApi implements ReviewApi {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      throw new Error(`${init?.method ?? 'GET'} ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  fetchNext(reviewer: string): Promise<QueueNext> {
    return this.request<QueueNext>(`/api/queue/next?reviewer=${encodeURIComponent(reviewer)}`);
  }

  submitDecision(payload: DecisionPayload): Promise<DecisionAck> {
    return this.request<DecisionAck>('/api/decisions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  fetchProgress(): Promise<Progress> {
    return this.request<Progress>('/api/progress');
  }

  imageUrl(path: string): string {
    return this.base + path;
  }
}
