// Typed client for the session service. Everything the UI knows about the
// backend goes through this module; the only configuration is the base URL.

export type Box = [number, number, number, number];

export type QuestionKind =
  | 'composition'
  | 'naming'
  | 'check-box'
  | 'draw-box'
  | 'check-sample'
  | 'new-exemplar';

export interface SceneSummary {
  scene_id: string;
  width: number;
  height: number;
  cells: number[][];
}

export interface QuestionPayload {
  qid: number;
  kind: QuestionKind;
  category: string;
  prompt: string;
  scene_id: string | null;
  part_name: string | null;
  proposed_box: Box | null;
  anchor_scene_id: string | null;
  known_anchors: string[];
  part_names: string[];
  pool_scene_ids: string[];
  scene: SceneSummary | null;
  anchor_scene: SceneSummary | null;
}

export interface AnswerRequest {
  qid: number;
  kind: QuestionKind;
  yes?: boolean | null;
  names?: string[] | null;
  box?: Box | null;
  scene_id?: string | null;
  boxes?: Record<string, Box> | null;
}

export interface AnswerAck {
  ok: boolean;
  answered_qid: number;
  cumulative_cost: number;
  records: number;
}

export interface PoseSummary {
  key: string;
  category: string;
  parts: number;
  semantic_parts: number;
  confirmed: boolean;
}

export interface LedgerSnapshot {
  cumulative_cost: number;
  cumulative_predicted_cost: number;
  records: Array<{
    iteration: number;
    kind: number;
    category: string;
    pose_key: string | null;
    predicted_cost: number;
    realized_cost: number;
    predicted_gains: number[];
    realized_gains: number[];
    boxes_labeled: number;
    judgments: number;
    questions: number;
  }>;
  pose_stats: Record<string, unknown>;
  category_stats: Record<string, unknown>;
  losses: Record<string, Record<string, number>>;
}

export interface SessionState {
  session_id: string;
  mode: string;
  finished: boolean;
  failed: boolean;
  error: string | null;
  pending_question: boolean;
  answered: number;
  ledger: LedgerSnapshot;
  poses: PoseSummary[];
}

export interface SceneGrid {
  scene_id: string;
  keyword: string;
  channels: number;
  width: number;
  height: number;
  grid: number[][][];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function raiseForStatus(res: Response): Promise<never> {
  let kind = 'unknown';
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (body && body.error) {
      kind = body.error.kind ?? kind;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(res.status, kind, message);
}

export class SessionClient {
  constructor(readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) await raiseForStatus(res);
    return res.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raiseForStatus(res);
    return res.json() as Promise<T>;
  }

  createSession(mode: 'oracle' | 'live', world: object = {}, engine: object = {}) {
    return this.post<{ session_id: string; mode: string }>('/sessions', {
      mode,
      world,
      engine,
    });
  }

  /** Pending question, or null when the learner is busy or done (204). */
  async nextQuestion(sessionId: string): Promise<QuestionPayload | null> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/question`);
    if (res.status === 204) return null;
    if (!res.ok) await raiseForStatus(res);
    return res.json() as Promise<QuestionPayload>;
  }

  submitAnswer(sessionId: string, answer: AnswerRequest): Promise<AnswerAck> {
    return this.post<AnswerAck>(`/sessions/${sessionId}/answer`, answer);
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.get<SessionState>(`/sessions/${sessionId}/state`);
  }

  getScene(sessionId: string, sceneId: string): Promise<SceneGrid> {
    return this.get<SceneGrid>(`/scenes/${sessionId}:${sceneId}`);
  }
}
