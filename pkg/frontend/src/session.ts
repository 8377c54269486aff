/** Survey session state machine.
 *
 * One mutation in flight at a time: an answer is accepted only while a
 * question is on screen, the widget stays locked until the server
 * confirms, and only then does the next question load. Recoverable
 * server complaints (state conflicts, rejected values) keep the current
 * question up and surface as a banner instead of destroying progress.
 */

import { ApiClient, ApiError, type Answer } from "./api.js";
import { assertKnownProfile } from "./labels.js";
import type { Question } from "./types.js";

export interface QuestionView {
  question: Question;
  /** Locally verified display labels, purchase questions only. */
  profileLabels?: [[string, string], [string, string]];
}

export type SessionState =
  | { kind: "idle" }
  | { kind: "loading" }
  | { kind: "question"; view: QuestionView }
  | { kind: "submitting"; view: QuestionView }
  | { kind: "finished"; receipt: string }
  | { kind: "failed"; message: string };

export interface QuestionRecord {
  questionNumber: number;
  round: number;
  phase: string;
  type: string;
  order: string;
  formPair: [string, string];
}

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

export class SessionController {
  private state_: SessionState = { kind: "idle" };
  private sessionId_: string | null = null;
  private banner_: string | null = null;
  private roundPairs = new Map<number, [string, string]>();
  /** Every question served, in order; used by tests and debugging. */
  readonly questionLog: QuestionRecord[] = [];
  private readonly listeners = new Set<(s: SessionState) => void>();

  constructor(
    private readonly api: ApiClient,
    private readonly studyId: string,
  ) {}

  get state(): SessionState {
    return this.state_;
  }

  get sessionId(): string | null {
    return this.sessionId_;
  }

  /** Current non-destructive error banner, if any. */
  get banner(): string | null {
    return this.banner_;
  }

  dismissBanner(): void {
    this.banner_ = null;
  }

  /** Observe state changes; returns the unsubscribe function. */
  subscribe(listener: (s: SessionState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(next: SessionState): void {
    this.state_ = next;
    for (const fn of this.listeners) fn(next);
  }

  async start(): Promise<void> {
    if (this.state_.kind !== "idle") {
      throw new ProtocolError("session already started");
    }
    this.setState({ kind: "loading" });
    try {
      const info = await this.api.createSession(this.studyId);
      this.sessionId_ = info.session_id;
      await this.loadNext();
    } catch (err) {
      this.fail(err);
    }
  }

  private async loadNext(): Promise<void> {
    const question = await this.api.nextQuestion(this.sessionId_!);
    this.checkPairing(question);
    this.questionLog.push({
      questionNumber: question.question_number,
      round: question.round,
      phase: question.phase,
      type: question.question_type,
      order: question.order,
      formPair: question.form_pair,
    });
    const view: QuestionView = { question };
    if (question.question_type === "purchase") {
      const labels = question.profile_labels;
      if (!labels) {
        throw new ProtocolError("purchase question without profile labels");
      }
      view.profileLabels = [
        assertKnownProfile(labels[0]),
        assertKnownProfile(labels[1]),
      ];
    }
    this.setState({ kind: "question", view });
  }

  /** Both halves of a learning round must show the same two designs. */
  private checkPairing(question: Question): void {
    if (question.phase !== "learning") return;
    const seen = this.roundPairs.get(question.round);
    if (seen === undefined) {
      this.roundPairs.set(question.round, question.form_pair);
      return;
    }
    if (
      seen[0] !== question.form_pair[0] ||
      seen[1] !== question.form_pair[1]
    ) {
      throw new ProtocolError(
        `round ${question.round} switched designs between its two questions`,
      );
    }
  }

  /**
   * Submit the answer for the question on screen. Returns false without
   * side effects when no question is awaiting an answer (double clicks,
   * stray calls while a submission is in flight).
   */
  async answer(value: Answer["value"]): Promise<boolean> {
    if (this.state_.kind !== "question") return false;
    const view = this.state_.view;
    this.banner_ = null;
    this.setState({ kind: "submitting", view });
    try {
      const ack = await this.api.submitAnswer(this.sessionId_!, {
        type: view.question.question_type,
        value,
      });
      if (ack.status === "finished") {
        this.setState({ kind: "finished", receipt: ack.session_id });
      } else {
        await this.loadNext();
      }
    } catch (err) {
      if (err instanceof ApiError && err.recoverable) {
        this.banner_ = err.detail;
        this.setState({ kind: "question", view });
      } else {
        this.fail(err);
      }
    }
    return true;
  }

  private fail(err: unknown): void {
    const message = err instanceof Error ? err.message : String(err);
    this.setState({ kind: "failed", message });
  }
}
