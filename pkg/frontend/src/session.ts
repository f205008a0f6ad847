import type { ReviewApi } from './api';
import type { DecisionPayload, Progress, ReviewCard, Verdict } from './types';

/** What the session is waiting to do when the network comes back. */
export type PendingWork =
  | { op: 'fetch-next' }
  | { op: 'submit'; payload: DecisionPayload };

export type SessionState =
  | { phase: 'loading' }
  | { phase: 'reviewing'; card: ReviewCard }
  | { phase: 'editing'; card: ReviewCard; draft: string }
  | { phase: 'retry'; pending: PendingWork; error: string }
  | { phase: 'done'; progress: Progress };

/**
 * Review session state machine.
 *
 * All truth lives server-side; this object only tracks the card in hand and
 * one unit of pending work. A failed request never loses a decision: the
 * payload is kept and re-sent verbatim on retry, and the server treats the
 * re-send as idempotent.
 */
export class ReviewSession {
  private state: SessionState = { phase: 'loading' };
  private inFlight = false;
  private listeners: Array<(state: SessionState) => void> = [];

  constructor(
    private readonly api: ReviewApi,
    private readonly reviewer: string,
  ) {}

  getState(): SessionState {
    return this.state;
  }

  onChange(listener: (state: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private setState(state: SessionState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  async start(): Promise<void> {
    await this.runFetchNext();
  }

  private async runFetchNext(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.setState({ phase: 'loading' });
    try {
      const next = await this.api.fetchNext(this.reviewer);
      if (next.done || !next.sample || !next.lease_id || !next.image_url) {
        this.setState({ phase: 'done', progress: next.progress });
      } else {
        this.setState({
          phase: 'reviewing',
          card: {
            sample: next.sample,
            leaseId: next.lease_id,
            imageUrl: this.api.imageUrl(next.image_url),
            progress: next.progress,
          },
        });
      }
    } catch (error) {
      this.setState({
        phase: 'retry',
        pending: { op: 'fetch-next' },
        error: String(error),
      });
    } finally {
      this.inFlight = false;
    }
  }

  private async runSubmit(payload: DecisionPayload): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      await this.api.submitDecision(payload);
    } catch (error) {
      this.setState({ phase: 'retry', pending: { op: 'submit', payload }, error: String(error) });
      this.inFlight = false;
      return;
    }
    this.inFlight = false;
    await this.runFetchNext();
  }

  private currentCard(): ReviewCard | null {
    if (this.state.phase === 'reviewing' || this.state.phase === 'editing') {
      return this.state.card;
    }
    return null;
  }

  async decide(verdict: Verdict, editedText?: string): Promise<void> {
    const card = this.currentCard();
    if (!card || this.inFlight) return;
    const payload: DecisionPayload = {
      sample_id: card.sample.sample_id,
      verdict,
      reviewer: this.reviewer,
      lease_id: card.leaseId,
    };
    if (verdict === 'edit') {
      if (!editedText || !editedText.trim()) return; // nothing to submit
      payload.edited_text = editedText;
    }
    await this.runSubmit(payload);
  }

  beginEdit(): void {
    if (this.state.phase !== 'reviewing') return;
    this.setState({ phase: 'editing', card: this.state.card, draft: this.state.card.sample.text });
  }

  cancelEdit(): void {
    if (this.state.phase !== 'editing') return;
    this.setState({ phase: 'reviewing', card: this.state.card });
  }

  /** Extension: move on without a verdict; the lease lapses server-side. */
  async skip(): Promise<void> {
    if (this.state.phase !== 'reviewing') return;
    await this.runFetchNext();
  }

  async retry(): Promise<void> {
    if (this.state.phase !== 'retry') return;
    const pending = this.state.pending;
    if (pending.op === 'submit') {
      await this.runSubmit(pending.payload);
    } else {
      await this.runFetchNext();
    }
  }
}
