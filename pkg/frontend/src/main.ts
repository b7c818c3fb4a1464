import './style.css';
import {
  ApiError,
  SessionClient,
  type Box,
  type QuestionPayload,
  type SceneGrid,
  type SceneSummary,
  type SessionState,
} from './api';
import { SessionFlow, type FlowView } from './flow';
import { drawCostChart } from './costChart';
import { dragToBox } from './grid';
import { cellRange, drawBoxOverlay, drawScene, legendStops } from './scene';

const SESSION_KEY = 'aogqa-session'; // sessionStorage keeps it per-tab
const BASE_URL_KEY = 'aogqa-base-url';
const DEFAULT_BASE_URL = 'http://127.0.0.1:8000';

const el = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

interface ExemplarDraft {
  index: number;
  boxes: Record<string, Box>;
  activePart: string | null;
}

interface Draft {
  qid: number | null;
  box: Box | null;
  exemplar: ExemplarDraft;
}

function freshDraft(qid: number | null): Draft {
  return { qid, box: null, exemplar: { index: 0, boxes: {}, activePart: null } };
}

let client = new SessionClient(localStorage.getItem(BASE_URL_KEY) ?? DEFAULT_BASE_URL);
let flow: SessionFlow | null = null;
let view: FlowView | null = null;
let draft: Draft = freshDraft(null);
const sceneCache = new Map<string, SceneSummary>();

// ---------------------------------------------------------------------------
// prompts: the service sends structured fields, the wording lives client-side

function promptFor(q: QuestionPayload): string {
  if (q.prompt) return q.prompt;
  switch (q.kind) {
    case 'composition':
      return `which semantic parts make up a ${q.category}? list them comma-separated.`;
    case 'naming':
      return `name the semantic parts of ${q.category}, comma-separated, in a stable order.`;
    case 'check-box':
      return q.proposed_box
        ? `does the highlighted box cover the ${q.part_name} in this scene?`
        : `the learner thinks the ${q.part_name} is not visible here. is that right?`;
    case 'draw-box':
      return `draw a box around the ${q.part_name}, or mark it not visible.`;
    case 'check-sample':
      return 'does the candidate scene show the same arrangement as the anchor?';
    case 'new-exemplar':
      return `pick a pool scene showing a new arrangement of ${q.category} and box every declared part, or refuse.`;
  }
}

// ---------------------------------------------------------------------------
// scene widget: colored cell grid + legend, optional box drawing

interface Overlay {
  box: Box;
  color: string;
  label?: string;
}

interface SceneWidget {
  root: HTMLElement;
  redraw: () => void;
}

function sceneWidget(
  summary: SceneSummary,
  caption: string,
  overlays: () => Overlay[],
  onBox?: (box: Box) => void,
): SceneWidget {
  const cellPx = Math.min(22, Math.max(8, Math.floor(440 / Math.max(summary.width, summary.height))));
  const root = document.createElement('div');
  root.className = 'scene-block';
  const canvas = document.createElement('canvas');
  canvas.className = 'scene' + (onBox ? ' drawable' : '');
  canvas.width = summary.width * cellPx;
  canvas.height = summary.height * cellPx;
  root.appendChild(canvas);

  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('canvas 2d context unavailable');

  let drag: { ax: number; ay: number; bx: number; by: number } | null = null;

  const redraw = () => {
    drawScene(ctx, summary, cellPx);
    for (const o of overlays()) drawBoxOverlay(ctx, o.box, cellPx, o.color, o.label);
    if (drag) {
      ctx.strokeStyle = '#ffffff';
      ctx.setLineDash([4, 3]);
      ctx.lineWidth = 1.5;
      ctx.strokeRect(
        Math.min(drag.ax, drag.bx),
        Math.min(drag.ay, drag.by),
        Math.abs(drag.bx - drag.ax),
        Math.abs(drag.by - drag.ay),
      );
      ctx.setLineDash([]);
    }
  };

  if (onBox) {
    const pos = (ev: PointerEvent) => {
      const r = canvas.getBoundingClientRect();
      return { x: ev.clientX - r.left, y: ev.clientY - r.top };
    };
    canvas.addEventListener('pointerdown', (ev) => {
      canvas.setPointerCapture(ev.pointerId);
      const p = pos(ev);
      drag = { ax: p.x, ay: p.y, bx: p.x, by: p.y };
      redraw();
    });
    canvas.addEventListener('pointermove', (ev) => {
      if (!drag) return;
      const p = pos(ev);
      drag.bx = p.x;
      drag.by = p.y;
      redraw();
    });
    canvas.addEventListener('pointerup', () => {
      if (!drag) return;
      const box = dragToBox(drag.ax, drag.ay, drag.bx, drag.by, cellPx, summary.width, summary.height);
      drag = null;
      onBox(box);
    });
  }

  const legend = document.createElement('div');
  legend.className = 'legend';
  legend.append('intensity:');
  for (const stop of legendStops(cellRange(summary.cells), 5)) {
    const item = document.createElement('span');
    const swatch = document.createElement('span');
    swatch.className = 'swatch';
    swatch.style.background = stop.color;
    item.appendChild(swatch);
    item.append(stop.value.toFixed(2));
    legend.appendChild(item);
  }
  root.appendChild(legend);

  const cap = document.createElement('div');
  cap.className = 'caption';
  cap.textContent = caption;
  root.appendChild(cap);

  redraw();
  return { root, redraw };
}

// ---------------------------------------------------------------------------
// question cards

function cardShell(q: QuestionPayload): HTMLElement {
  const wrap = document.createElement('div');
  const p = document.createElement('p');
  p.className = 'prompt';
  const tag = document.createElement('span');
  tag.className = 'kind-tag';
  tag.textContent = q.kind;
  p.appendChild(tag);
  p.append(promptFor(q));
  wrap.appendChild(p);
  return wrap;
}

function noticeLine(text: string | null): HTMLElement | null {
  if (!text) return null;
  const div = document.createElement('div');
  div.className = 'notice';
  div.textContent = text;
  return div;
}

function namesCard(q: QuestionPayload): HTMLElement {
  const wrap = cardShell(q);
  if (q.part_names.length > 0) {
    const hint = document.createElement('div');
    hint.className = 'hint';
    hint.textContent = `previously taught: ${q.part_names.join(', ')}`;
    wrap.appendChild(hint);
  }
  const field = document.createElement('div');
  field.className = 'field';
  const input = document.createElement('input');
  input.type = 'text';
  input.placeholder = 'head, torso';
  input.spellcheck = false;
  field.appendChild(input);
  wrap.appendChild(field);
  const actions = document.createElement('div');
  actions.className = 'actions';
  const submit = document.createElement('button');
  submit.textContent = 'submit names';
  const send = () => {
    const names = input.value.split(',').map((s) => s.trim()).filter((s) => s.length > 0);
    void guarded(() => flow!.submit({ names }));
  };
  submit.addEventListener('click', send);
  input.addEventListener('keydown', (ev) => {
    if (ev.key === 'Enter') send();
  });
  actions.appendChild(submit);
  wrap.appendChild(actions);
  queueMicrotask(() => input.focus());
  return wrap;
}

function yesNoButtons(onPick: (yes: boolean) => void, yesText: string, noText: string): HTMLElement {
  const actions = document.createElement('div');
  actions.className = 'actions';
  const yes = document.createElement('button');
  yes.textContent = `${yesText} (y)`;
  yes.addEventListener('click', () => onPick(true));
  const no = document.createElement('button');
  no.className = 'no';
  no.textContent = `${noText} (n)`;
  no.addEventListener('click', () => onPick(false));
  actions.append(yes, no);
  return actions;
}

function checkBoxCard(q: QuestionPayload): HTMLElement {
  const wrap = cardShell(q);
  wrap.appendChild(requireScene(q, q.scene, `scene ${q.scene_id}`, () =>
    q.proposed_box ? [{ box: q.proposed_box, color: '#e07b2f', label: q.part_name ?? undefined }] : [],
  ));
  wrap.appendChild(
    yesNoButtons((yes) => void guarded(() => flow!.submit({ yes })), 'looks right', 'incorrect'),
  );
  return wrap;
}

function drawBoxCard(q: QuestionPayload): HTMLElement {
  const wrap = cardShell(q);
  let widget: SceneWidget | null = null;
  const submit = document.createElement('button');
  const sync = () => {
    submit.disabled = draft.box === null;
    widget?.redraw();
  };
  wrap.appendChild(
    requireScene(
      q,
      q.scene,
      `scene ${q.scene_id}`,
      () => (draft.box ? [{ box: draft.box, color: '#2f8f5b', label: q.part_name ?? undefined }] : []),
      (box) => {
        draft.box = box;
        sync();
      },
      (w) => {
        widget = w;
      },
    ),
  );
  if (q.anchor_scene) {
    wrap.appendChild(sceneWidget(q.anchor_scene, `anchor ${q.anchor_scene_id}`, () => []).root);
  }
  const hint = document.createElement('div');
  hint.className = 'hint';
  hint.textContent = 'drag on the scene to place the box; it snaps to grid cells.';
  wrap.appendChild(hint);
  const actions = document.createElement('div');
  actions.className = 'actions';
  submit.textContent = 'submit box';
  submit.addEventListener('click', () => {
    if (draft.box) void guarded(() => flow!.submit({ box: draft.box }));
  });
  const invisible = document.createElement('button');
  invisible.className = 'quiet';
  invisible.textContent = 'part not visible';
  invisible.addEventListener('click', () => void guarded(() => flow!.submit({ box: null })));
  actions.append(submit, invisible);
  wrap.appendChild(actions);
  sync();
  return wrap;
}

function checkSampleCard(q: QuestionPayload): HTMLElement {
  const wrap = cardShell(q);
  wrap.appendChild(requireScene(q, q.scene, `candidate ${q.scene_id}`, () => []));
  wrap.appendChild(requireScene(q, q.anchor_scene, `anchor ${q.anchor_scene_id}`, () => []));
  wrap.appendChild(
    yesNoButtons((yes) => void guarded(() => flow!.submit({ yes })), 'same arrangement', 'different'),
  );
  return wrap;
}

function exemplarCard(q: QuestionPayload): HTMLElement {
  const wrap = cardShell(q);
  const ex = draft.exemplar;
  const pool = q.pool_scene_ids;

  if (q.part_names.length === 0) {
    // nothing declared yet, the flow cannot collect boxes
    const hint = document.createElement('div');
    hint.className = 'hint';
    hint.textContent = 'no parts declared for this category yet; refusing is the only option.';
    wrap.appendChild(hint);
  }

  if (pool.length === 0) {
    wrap.appendChild(refusalActions());
    return wrap;
  }

  ex.index = Math.min(ex.index, pool.length - 1);
  const sceneId = pool[ex.index];
  if (ex.activePart === null) {
    ex.activePart = q.part_names.find((n) => !(n in ex.boxes)) ?? q.part_names[0] ?? null;
  }

  const nav = document.createElement('div');
  nav.className = 'actions';
  const prev = document.createElement('button');
  prev.className = 'quiet';
  prev.textContent = '< prev scene';
  prev.disabled = ex.index === 0;
  prev.addEventListener('click', () => {
    ex.index -= 1;
    ex.boxes = {};
    ex.activePart = null;
    render();
  });
  const next = document.createElement('button');
  next.className = 'quiet';
  next.textContent = 'next scene >';
  next.disabled = ex.index >= pool.length - 1;
  next.addEventListener('click', () => {
    ex.index += 1;
    ex.boxes = {};
    ex.activePart = null;
    render();
  });
  const counter = document.createElement('span');
  counter.className = 'hint';
  counter.textContent = `pool scene ${ex.index + 1} of ${pool.length} (${sceneId})`;
  nav.append(prev, next, counter);
  wrap.appendChild(nav);

  const summary = cachedScene(sceneId);
  if (summary === null) {
    const loading = document.createElement('div');
    loading.className = 'waiting';
    loading.textContent = `loading scene ${sceneId}...`;
    wrap.appendChild(loading);
    return wrap;
  }

  let widget: SceneWidget | null = null;
  const chips = document.createElement('div');
  chips.className = 'part-chips';
  const submit = document.createElement('button');

  const sync = () => {
    chips.replaceChildren();
    for (const name of q.part_names) {
      const chip = document.createElement('button');
      chip.type = 'button';
      chip.className =
        'chip' + (name in ex.boxes ? ' done' : '') + (name === ex.activePart ? ' active' : '');
      chip.textContent = name in ex.boxes ? `${name} ✓` : name;
      chip.addEventListener('click', () => {
        ex.activePart = name;
        sync();
      });
      chips.appendChild(chip);
    }
    const missing = q.part_names.filter((n) => !(n in ex.boxes));
    submit.disabled = missing.length > 0;
    submit.textContent =
      missing.length > 0 ? `offer exemplar (box ${missing.length} more)` : 'offer exemplar';
    widget?.redraw();
  };

  const palette = ['#2f8f5b', '#7a4fb3', '#c2703d', '#3c7dc4', '#a83c66'];
  widget = sceneWidget(
    summary,
    `pool scene ${sceneId}`,
    () =>
      Object.entries(ex.boxes).map(([name, box], i) => ({
        box,
        color: palette[i % palette.length],
        label: name,
      })),
    (box) => {
      if (ex.activePart === null) return;
      ex.boxes[ex.activePart] = box;
      ex.activePart = q.part_names.find((n) => !(n in ex.boxes)) ?? ex.activePart;
      sync();
    },
  );
  wrap.appendChild(widget.root);
  const hint = document.createElement('div');
  hint.className = 'hint';
  hint.textContent = 'click a part chip, then drag its box; every declared part needs one.';
  wrap.appendChild(hint);
  wrap.appendChild(chips);

  const actions = document.createElement('div');
  actions.className = 'actions';
  submit.addEventListener('click', () => {
    void guarded(() => flow!.submit({ scene_id: sceneId, boxes: { ...ex.boxes } }));
  });
  actions.appendChild(submit);
  actions.appendChild(refusalButton());
  wrap.appendChild(actions);
  sync();
  return wrap;
}

function refusalButton(): HTMLElement {
  const refuse = document.createElement('button');
  refuse.className = 'quiet';
  refuse.textContent = 'no new arrangement in the pool';
  refuse.addEventListener('click', () => void guarded(() => flow!.submit({ scene_id: null })));
  return refuse;
}

function refusalActions(): HTMLElement {
  const actions = document.createElement('div');
  actions.className = 'actions';
  actions.appendChild(refusalButton());
  return actions;
}

/** Scene block, or a placeholder with a retry when the payload is degenerate. */
function requireScene(
  q: QuestionPayload,
  summary: SceneSummary | null,
  caption: string,
  overlays: () => Overlay[],
  onBox?: (box: Box) => void,
  grab?: (w: SceneWidget) => void,
): HTMLElement {
  if (!summary || summary.cells.length === 0) {
    const div = document.createElement('div');
    div.className = 'error-card';
    div.textContent = `scene payload missing for question ${q.qid}. `;
    const retry = document.createElement('button');
    retry.className = 'quiet';
    retry.textContent = 'refetch question';
    retry.addEventListener('click', () => void guarded(() => flow!.refresh()));
    div.appendChild(retry);
    return div;
  }
  const widget = sceneWidget(summary, caption, overlays, onBox);
  grab?.(widget);
  return widget.root;
}

function questionCard(q: QuestionPayload, notice: string | null): HTMLElement {
  const container = document.createElement('div');
  const n = noticeLine(notice);
  if (n) container.appendChild(n);
  switch (q.kind) {
    case 'composition':
    case 'naming':
      container.appendChild(namesCard(q));
      break;
    case 'check-box':
      container.appendChild(checkBoxCard(q));
      break;
    case 'draw-box':
      container.appendChild(drawBoxCard(q));
      break;
    case 'check-sample':
      container.appendChild(checkSampleCard(q));
      break;
    case 'new-exemplar':
      container.appendChild(exemplarCard(q));
      break;
    default:
      throw new Error(`unknown question kind ${(q as QuestionPayload).kind}`);
  }
  return container;
}

function errorCard(message: string, payload?: unknown): HTMLElement {
  const div = document.createElement('div');
  div.className = 'error-card';
  const p = document.createElement('p');
  p.textContent = message;
  div.appendChild(p);
  if (payload !== undefined) {
    const pre = document.createElement('pre');
    pre.textContent = JSON.stringify(payload, null, 2);
    div.appendChild(pre);
  }
  const retry = document.createElement('button');
  retry.className = 'quiet';
  retry.textContent = 'refetch question';
  retry.addEventListener('click', () => void guarded(() => flow!.refresh()));
  div.appendChild(retry);
  return div;
}

// ---------------------------------------------------------------------------
// dashboard

function renderDashboard(state: SessionState | null): void {
  const dash = el<HTMLDivElement>('dashboard');
  dash.replaceChildren();
  if (!state) {
    dash.textContent = 'no snapshot yet.';
    return;
  }
  const info = document.createElement('div');
  info.className = 'hint';
  info.textContent =
    `mode ${state.mode} | answered ${state.answered} | ` +
    `storylines ${state.ledger.records.length}` +
    (state.finished ? ' | finished' : '') +
    (state.failed ? ` | failed: ${state.error}` : '');
  dash.appendChild(info);

  if (state.poses.length > 0) {
    const table = document.createElement('table');
    table.className = 'stats';
    table.innerHTML = '<tr><th>pose</th><th>parts</th><th>semantic</th><th>confirmed</th></tr>';
    for (const pose of state.poses) {
      const tr = document.createElement('tr');
      for (const v of [pose.key, pose.parts, pose.semantic_parts, pose.confirmed ? 'yes' : 'no']) {
        const td = document.createElement('td');
        td.textContent = String(v);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    dash.appendChild(table);
  }

  const losses = Object.entries(state.ledger.losses);
  if (losses.length > 0) {
    const table = document.createElement('table');
    table.className = 'stats';
    table.innerHTML = '<tr><th>pose</th><th>detect</th><th>locate</th><th>arrange</th></tr>';
    for (const [key, loss] of losses) {
      const tr = document.createElement('tr');
      const cells = [
        key,
        ...['detection', 'localization', 'arrangement'].map((k) =>
          loss[k] !== undefined ? loss[k].toFixed(3) : '-',
        ),
      ];
      for (const v of cells) {
        const td = document.createElement('td');
        td.textContent = v;
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    dash.appendChild(table);
  }
}

// ---------------------------------------------------------------------------
// top-level render

function statusText(v: FlowView | null): string {
  if (!v || v.phase === 'idle') return 'no session';
  switch (v.phase) {
    case 'working':
      return 'learner is thinking...';
    case 'question':
      return `question ${v.question?.qid} pending`;
    case 'submitting':
      return 'waiting for server ack...';
    case 'finished':
      return 'session finished';
    case 'failed':
      return 'session failed';
    default:
      return '';
  }
}

function render(): void {
  const card = el<HTMLDivElement>('card');
  el<HTMLSpanElement>('status-line').textContent = statusText(view);
  el<HTMLButtonElement>('drop-session').classList.toggle('hidden', view === null);

  card.replaceChildren();
  if (!view || view.phase === 'idle') {
    const p = document.createElement('p');
    p.className = 'waiting';
    p.textContent = 'set the service base URL and start a live session.';
    card.appendChild(p);
  } else if (view.phase === 'working') {
    const p = document.createElement('p');
    p.className = 'waiting';
    p.textContent = 'learner is thinking...';
    card.appendChild(p);
  } else if (view.phase === 'submitting') {
    const p = document.createElement('p');
    p.className = 'waiting';
    p.textContent = 'answer sent, waiting for the ack...';
    card.appendChild(p);
  } else if (view.phase === 'finished') {
    const p = document.createElement('p');
    p.textContent =
      `run complete: ${view.answered} answers, ` +
      `final cost ${view.series.length ? view.series[view.series.length - 1].cost.toFixed(2) : '0'}.`;
    card.appendChild(p);
  } else if (view.phase === 'failed') {
    card.appendChild(errorCard(`session failed: ${view.notice ?? 'unknown error'}`));
  } else if (view.question) {
    try {
      card.appendChild(questionCard(view.question, view.notice));
    } catch (err) {
      card.appendChild(errorCard(`could not render question: ${String(err)}`, view.question));
    }
  }

  const chart = el<HTMLCanvasElement>('cost-chart');
  const ctx = chart.getContext('2d');
  if (ctx && view) drawCostChart(ctx, view.series, chart.width, chart.height);
  const last = view && view.series.length ? view.series[view.series.length - 1] : null;
  el<HTMLDivElement>('cost-readout').textContent = last
    ? `${view!.answered} answered, cumulative cost ${last.cost.toFixed(2)}`
    : 'no answers yet';

  renderDashboard(view?.state ?? null);
}

// ---------------------------------------------------------------------------
// service reachability banner

function showBanner(message: string, retry?: () => void): void {
  const banner = el<HTMLDivElement>('banner');
  banner.replaceChildren();
  banner.append(message);
  if (retry) {
    const btn = document.createElement('button');
    btn.className = 'quiet';
    btn.textContent = 'retry';
    btn.addEventListener('click', () => {
      hideBanner();
      retry();
    });
    banner.appendChild(btn);
  }
  banner.classList.remove('hidden');
}

function hideBanner(): void {
  el<HTMLDivElement>('banner').classList.add('hidden');
}

/** Run a flow action; network failures surface as a stale-data banner. */
async function guarded(action: () => Promise<void>): Promise<void> {
  try {
    await action();
    hideBanner();
  } catch (err) {
    if (err instanceof ApiError) {
      showBanner(`service rejected the request: ${err.kind} (${err.message})`);
    } else {
      const id = sessionStorage.getItem(SESSION_KEY);
      showBanner(
        'service unreachable, showing the last known state.',
        id ? () => void guarded(() => flow!.resume(id)) : undefined,
      );
    }
  }
}

// ---------------------------------------------------------------------------
// exemplar pool scene loading

function cachedScene(sceneId: string): SceneSummary | null {
  const sessionId = view?.sessionId;
  if (!sessionId) return null;
  const key = `${sessionId}:${sceneId}`;
  const hit = sceneCache.get(key);
  if (hit) return hit;
  void client
    .getScene(sessionId, sceneId)
    .then((scene) => {
      sceneCache.set(key, gridToSummary(scene));
      render();
    })
    .catch((err) => showBanner(`could not load scene ${sceneId}: ${String(err)}`));
  return null;
}

function gridToSummary(scene: SceneGrid): SceneSummary {
  const cells: number[][] = [];
  for (let y = 0; y < scene.height; y++) {
    const row: number[] = [];
    for (let x = 0; x < scene.width; x++) {
      let sum = 0;
      for (let c = 0; c < scene.channels; c++) sum += scene.grid[c][y][x];
      row.push(sum / Math.max(1, scene.channels));
    }
    cells.push(row);
  }
  return { scene_id: scene.scene_id, width: scene.width, height: scene.height, cells };
}

// ---------------------------------------------------------------------------
// wiring

function onViewChange(next: FlowView): void {
  if (next.question?.qid !== draft.qid) draft = freshDraft(next.question?.qid ?? null);
  view = next;
  if (next.sessionId) sessionStorage.setItem(SESSION_KEY, next.sessionId);
  render();
}

function startSession(): void {
  let world: object;
  let engine: object;
  try {
    world = JSON.parse(el<HTMLTextAreaElement>('world-json').value || '{}');
    engine = JSON.parse(el<HTMLTextAreaElement>('engine-json').value || '{}');
  } catch (err) {
    showBanner(`config is not valid JSON: ${String(err)}`);
    return;
  }
  const baseUrl = el<HTMLInputElement>('base-url').value.trim() || DEFAULT_BASE_URL;
  localStorage.setItem(BASE_URL_KEY, baseUrl);
  client = new SessionClient(baseUrl);
  sceneCache.clear();
  flow = new SessionFlow(client, onViewChange);
  void guarded(() => flow!.start('live', world, engine));
}

function dropSession(): void {
  sessionStorage.removeItem(SESSION_KEY);
  flow = null;
  view = null;
  draft = freshDraft(null);
  sceneCache.clear();
  hideBanner();
  render();
}

document.addEventListener('keydown', (ev) => {
  const target = ev.target as HTMLElement | null;
  if (target && (target.tagName === 'INPUT' || target.tagName === 'TEXTAREA')) return;
  if (!view || view.phase !== 'question' || !view.question) return;
  const kind = view.question.kind;
  if (kind !== 'check-box' && kind !== 'check-sample') return;
  if (ev.key === 'y' || ev.key === 'Y') void guarded(() => flow!.submit({ yes: true }));
  if (ev.key === 'n' || ev.key === 'N') void guarded(() => flow!.submit({ yes: false }));
});

function boot(): void {
  el<HTMLInputElement>('base-url').value = localStorage.getItem(BASE_URL_KEY) ?? DEFAULT_BASE_URL;
  el<HTMLButtonElement>('start-session').addEventListener('click', startSession);
  el<HTMLButtonElement>('drop-session').addEventListener('click', dropSession);
  render();
  const existing = sessionStorage.getItem(SESSION_KEY);
  if (existing) {
    // reload mid-session: rejoin and rebuild history from the state endpoint
    const baseUrl = localStorage.getItem(BASE_URL_KEY) ?? DEFAULT_BASE_URL;
    client = new SessionClient(baseUrl);
    flow = new SessionFlow(client, onViewChange);
    void guarded(() => flow!.resume(existing));
  }
}

boot();
