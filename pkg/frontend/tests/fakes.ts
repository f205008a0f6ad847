import type { ReviewApi } from '../src/api';
import type {
  DecisionAck,
  DecisionPayload,
  Progress,
  QueueNext,
  Sample,
} from '../src/types';

export function makeSample(i: number, text = `The vehicle ${i}`): Sample {
  return {
    sample_id: `s${String(i).padStart(3, '0')}`,
    image_id: `im${i}`,
    bbox: [10 + i, 20, 110 + i, 90],
    text,
    split: null,
    status: 'pending',
  };
}

/**
 * In-memory stand-in for the review service with the same semantics:
 * exclusive leases, an append-only decision log, duplicate-payload
 * detection, and last-write-wins statuses.
 */
export class FakeServer implements ReviewApi {
  log: DecisionPayload[] = [];
  statuses = new Map<string, string>();
  editedTexts = new Map<string, string>();
  failNextRequests = 0;
  private leases = new Map<string, string>();
  private leaseCounter = 0;

  constructor(public samples: Sample[]) {}

  private maybeFail(): void {
    if (this.failNextRequests > 0) {
      this.failNextRequests -= 1;
      throw new Error('synthetic network failure');
    }
  }

  async fetchNext(reviewer: string): Promise<QueueNext> {
    this.maybeFail();
    for (const sample of this.samples) {
      if (this.statuses.has(sample.sample_id)) continue;
      if (this.leases.has(sample.sample_id)) continue;
      const leaseId = `lease-${reviewer}-${this.leaseCounter++}`;
      this.leases.set(sample.sample_id, leaseId);
      return {
        done: false,
        lease_id: leaseId,
        sample,
        image_url: `/api/samples/${sample.sample_id}/image`,
        progress: await this.fetchProgress(),
      };
    }
    return { done: true, progress: await this.fetchProgress() };
  }

  async submitDecision(payload: DecisionPayload): Promise<DecisionAck> {
    this.maybeFail();
    const duplicate = this.log.some(
      (logged) =>
        logged.sample_id === payload.sample_id &&
        logged.verdict === payload.verdict &&
        logged.reviewer === payload.reviewer &&
        logged.edited_text === payload.edited_text,
    );
    if (!duplicate) {
      this.log.push(payload);
      const status = { accept: 'accepted', reject: 'rejected', edit: 'edited' }[payload.verdict];
      this.statuses.set(payload.sample_id, status);
      if (payload.verdict === 'edit' && payload.edited_text) {
        this.editedTexts.set(payload.sample_id, payload.edited_text);
      }
      this.leases.delete(payload.sample_id);
    }
    return {
      sample_id: payload.sample_id,
      status: this.statuses.get(payload.sample_id) ?? 'pending',
      duplicate,
      conflict: false,
    };
  }

  async fetchProgress(): Promise<Progress> {
    const counts: Progress = { pending: 0, accepted: 0, rejected: 0, edited: 0 };
    for (const sample of this.samples) {
      const status = this.statuses.get(sample.sample_id) ?? 'pending';
      counts[status as keyof Progress] += 1;
    }
    return counts;
  }

  imageUrl(path: string): string {
    return path;
  }

  /** Mirror of the service's verified export: accepted/edited only. */
  exportVerified(): Array<{ sample_id: string; text: string; status: string }> {
    const out = [];
    for (const sample of this.samples) {
      const status = this.statuses.get(sample.sample_id);
      if (status !== 'accepted' && status !== 'edited') continue;
      out.push({
        sample_id: sample.sample_id,
        text: this.editedTexts.get(sample.sample_id) ?? sample.text,
        status,
      });
    }
    return out;
  }
}
