/** Wire types mirroring the review service's JSON schemas. */

export type BBox = [number, number, number, number]; // x_min, y_min, x_max, y_max

export interface Sample {
  sample_id: string;
  image_id: string;
  bbox: BBox;
  text: string;
  split: string | null;
  status: string;
}

export interface Progress {
  pending: number;
  accepted: number;
  rejected: number;
  edited: number;
}

export interface QueueNext {
  done: boolean;
  lease_id?: string;
  sample?: Sample;
  image_url?: string;
  progress: Progress;
}

export type Verdict = 'accept' | 'reject' | 'edit';

export interface DecisionPayload {
  sample_id: string;
  verdict: Verdict;
  reviewer: string;
  edited_text?: string;
  lease_id?: string;
}

export interface DecisionAck {
  sample_id: string;
  status: string;
  duplicate: boolean;
  conflict: boolean;
}

/** One card of work: everything needed to render and answer a sample. */
export interface ReviewCard {
  sample: Sample;
  leaseId: string;
  imageUrl: string;
  progress: Progress;
}
