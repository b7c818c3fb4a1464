// Session driver: one question on screen at a time, every answer waits for
// the server ack before the next question is fetched, and a reload rebuilds
// the whole history from the state endpoint. No optimistic updates anywhere.

import {
  ApiError,
  type AnswerRequest,
  type Box,
  type QuestionPayload,
  type SessionClient,
  type SessionState,
} from './api';
import { type CostPoint, seriesFromLedger } from './costChart';

export type FlowPhase =
  | 'idle'
  | 'working'
  | 'question'
  | 'submitting'
  | 'finished'
  | 'failed';

export interface AnswerInput {
  yes?: boolean | null;
  names?: string[] | null;
  box?: Box | null;
  scene_id?: string | null;
  boxes?: Record<string, Box> | null;
}

export interface FlowView {
  phase: FlowPhase;
  sessionId: string | null;
  question: QuestionPayload | null;
  series: CostPoint[];
  answered: number;
  state: SessionState | null;
  notice: string | null;
}

export interface FlowOptions {
  pollMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Pre-flight check mirroring what the server will reject anyway. Returns an
 * error message for the inline banner, or null when the input is sendable.
 */
export function validateInput(question: QuestionPayload, input: AnswerInput): string | null {
  const kind = question.kind;
  if (kind === 'composition' || kind === 'naming') {
    const names = (input.names ?? []).map((n) => n.trim()).filter((n) => n.length > 0);
    if (names.length === 0) return 'give at least one part name';
    return null;
  }
  if (kind === 'check-box' || kind === 'check-sample') {
    if (typeof input.yes !== 'boolean') return 'pick yes or no';
    return null;
  }
  if (kind === 'draw-box') {
    if (input.box == null) return null; // part not visible is a valid answer
    const scene = question.scene;
    if (scene && !boxFits(input.box, scene.width, scene.height)) {
      return 'box must stay inside the scene and have area';
    }
    return null;
  }
  if (kind === 'new-exemplar') {
    if (input.scene_id == null) return null; // refusal
    if (question.pool_scene_ids.length > 0 && !question.pool_scene_ids.includes(input.scene_id)) {
      return 'pick a scene from the pool';
    }
    const boxes = input.boxes ?? {};
    const missing = question.part_names.filter((name) => boxes[name] == null);
    if (missing.length > 0) return `box every declared part (missing: ${missing.join(', ')})`;
    return null;
  }
  return null;
}

function boxFits(box: Box, width: number, height: number): boolean {
  const [x0, y0, x1, y1] = box;
  return x0 >= 0 && y0 >= 0 && x1 <= width && y1 <= height && x0 < x1 && y0 < y1;
}

export class SessionFlow {
  private view: FlowView = {
    phase: 'idle',
    sessionId: null,
    question: null,
    series: [],
    answered: 0,
    state: null,
    notice: null,
  };
  private readonly pollMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    private readonly client: SessionClient,
    private readonly onChange: (view: FlowView) => void,
    options: FlowOptions = {},
  ) {
    this.pollMs = options.pollMs ?? 250;
    this.sleep = options.sleep ?? defaultSleep;
  }

  snapshot(): FlowView {
    return { ...this.view, series: [...this.view.series] };
  }

  private emit(patch: Partial<FlowView>): void {
    this.view = { ...this.view, ...patch };
    this.onChange(this.snapshot());
  }

  async start(mode: 'oracle' | 'live', world: object = {}, engine: object = {}): Promise<void> {
    this.emit({ phase: 'working', notice: null });
    const created = await this.client.createSession(mode, world, engine);
    this.emit({
      sessionId: created.session_id,
      series: [{ answered: 0, cost: 0 }],
      answered: 0,
      question: null,
      state: null,
    });
    await this.advance();
  }

  /** Rejoin an existing session after a reload; history comes from the ledger. */
  async resume(sessionId: string): Promise<void> {
    this.emit({ phase: 'working', sessionId, notice: null });
    const state = await this.client.getState(sessionId);
    this.emit({
      state,
      answered: state.answered,
      series: seriesFromLedger(state.ledger),
    });
    if (state.failed) {
      this.emit({ phase: 'failed', notice: state.error });
      return;
    }
    if (state.finished) {
      this.emit({ phase: 'finished' });
      return;
    }
    await this.advance();
  }

  async submit(input: AnswerInput): Promise<void> {
    const question = this.view.question;
    if (this.view.phase !== 'question' || question === null) return;
    const problem = validateInput(question, input);
    if (problem) {
      this.emit({ notice: problem });
      return;
    }
    const body: AnswerRequest = {
      qid: question.qid,
      kind: question.kind,
      yes: input.yes ?? null,
      names: input.names ?? null,
      box: input.box ?? null,
      scene_id: input.scene_id ?? null,
      boxes: input.boxes ?? null,
    };
    this.emit({ phase: 'submitting', notice: null });
    const sessionId = this.view.sessionId!;
    let ack;
    try {
      ack = await this.client.submitAnswer(sessionId, body);
    } catch (err) {
      if (err instanceof ApiError && err.kind === 'stale-question') {
        // the displayed question is gone server-side, fetch the real one
        await this.advance();
        return;
      }
      if (err instanceof ApiError) {
        this.emit({ phase: 'question', notice: `${err.kind}: ${err.message}` });
        return;
      }
      // network trouble: restore the question, let the caller show a banner
      this.emit({ phase: 'question', notice: null });
      throw err;
    }
    const answered = this.view.answered + 1;
    this.emit({
      answered,
      series: [...this.view.series, { answered, cost: ack.cumulative_cost }],
    });
    await this.advance();
  }

  /** Re-fetch the pending question, e.g. after a degenerate payload. */
  async refresh(): Promise<void> {
    if (this.view.phase === 'submitting' || this.view.sessionId === null) return;
    await this.advance();
  }

  /** Poll until the learner produces a question or the run ends. */
  private async advance(): Promise<void> {
    const sessionId = this.view.sessionId!;
    this.emit({ phase: 'working', question: null });
    for (;;) {
      const question = await this.client.nextQuestion(sessionId);
      if (question !== null) {
        this.emit({ phase: 'question', question });
        return;
      }
      const state = await this.client.getState(sessionId);
      this.emit({ state, answered: state.answered });
      if (state.failed) {
        this.emit({ phase: 'failed', notice: state.error });
        return;
      }
      if (state.finished) {
        this.emit({ phase: 'finished' });
        return;
      }
      await this.sleep(this.pollMs);
    }
  }
}
