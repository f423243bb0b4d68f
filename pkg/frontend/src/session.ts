/**
 * Editor session: draft skeleton annotation with medial-axis snapping,
 * bounded undo history, fitting and optimization through the service,
 * and local persistence so a reload restores the working state.
 */

import { ApiError, ServiceClient } from "./api.js";
import { snapToMedial } from "./geometry.js";
import type {
  DraftSkeleton,
  FitResult,
  JobStatus,
  MedialAxis,
  Mesh,
  MsdDocument,
  Vec3,
} from "./types.js";

export type AnnotateAction =
  | { type: "add-vertex"; pick: Vec3 }
  | { type: "add-edge"; a: number; b: number }
  | { type: "add-triangle"; a: number; b: number; c: number }
  | { type: "move"; vertex: number; pick: Vec3 }
  | { type: "delete"; vertex: number };

/** Minimal slice of window.localStorage so tests can run without a DOM. */
export interface DraftStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStore implements DraftStore {
  private items = new Map<string, string>();

  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }

  removeItem(key: string): void {
    this.items.delete(key);
  }
}

const DRAFT_KEY = "msd-editor-draft";
const HISTORY_LIMIT = 100;

function emptyDraft(): DraftSkeleton {
  return { vertices: [], edges: [], triangles: [] };
}

function cloneDraft(d: DraftSkeleton): DraftSkeleton {
  return JSON.parse(JSON.stringify(d)) as DraftSkeleton;
}

export class EditorSession {
  draft: DraftSkeleton = emptyDraft();
  fits: FitResult[] = [];
  document: MsdDocument | null = null;
  job: JobStatus | null = null;
  /** Last user-facing hint (missed picks, network trouble). */
  hint = "";

  private history: DraftSkeleton[] = [];

  constructor(
    readonly client: ServiceClient,
    readonly medial: MedialAxis,
    readonly snapTolerance = 0.25,
    private readonly store: DraftStore = new MemoryStore(),
  ) {}

  /** Load the render mesh + medial axis and restore any saved state. */
  static async open(
    client: ServiceClient,
    store: DraftStore = new MemoryStore(),
    snapTolerance = 0.25,
  ): Promise<{ session: EditorSession; mesh: Mesh }> {
    const [mesh, medial] = await Promise.all([
      client.getMesh(),
      client.getMedial(),
    ]);
    const session = new EditorSession(client, medial, snapTolerance, store);
    session.restoreDraft();
    try {
      session.document = await client.getDocument();
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 404)) throw err;
    }
    return { session, mesh };
  }

  // -- annotation ---------------------------------------------------------

  annotate(action: AnnotateAction): boolean {
    const before = cloneDraft(this.draft);
    const ok = this.apply(action);
    if (ok) {
      this.history.push(before);
      if (this.history.length > HISTORY_LIMIT) this.history.shift();
      this.persistDraft();
    }
    return ok;
  }

  private apply(action: AnnotateAction): boolean {
    const n = this.draft.vertices.length;
    switch (action.type) {
      case "add-vertex": {
        const snap = snapToMedial(this.medial, action.pick);
        if (snap.distance > this.snapTolerance) {
          this.hint = "pick missed the medial axis";
          return false;
        }
        this.draft.vertices.push(snap.point);
        return true;
      }
      case "add-edge": {
        const { a, b } = action;
        if (a === b || a < 0 || b < 0 || a >= n || b >= n) {
          this.hint = "edge needs two distinct existing vertices";
          return false;
        }
        this.draft.edges.push([a, b]);
        return true;
      }
      case "add-triangle": {
        const ids = [action.a, action.b, action.c];
        if (new Set(ids).size !== 3 || ids.some((i) => i < 0 || i >= n)) {
          this.hint = "triangle needs three distinct existing vertices";
          return false;
        }
        this.draft.triangles.push([action.a, action.b, action.c]);
        return true;
      }
      case "move": {
        if (action.vertex < 0 || action.vertex >= n) return false;
        const snap = snapToMedial(this.medial, action.pick);
        if (snap.distance > this.snapTolerance) {
          this.hint = "pick missed the medial axis";
          return false;
        }
        this.draft.vertices[action.vertex] = snap.point;
        return true;
      }
      case "delete": {
        const v = action.vertex;
        if (v < 0 || v >= n) return false;
        // cascade: drop incident edges/triangles, then reindex
        const remap = (i: number) => (i > v ? i - 1 : i);
        this.draft.vertices.splice(v, 1);
        this.draft.edges = this.draft.edges
          .filter((e) => !e.includes(v))
          .map(([a, b]) => [remap(a), remap(b)]);
        this.draft.triangles = this.draft.triangles
          .filter((t) => !t.includes(v))
          .map(([a, b, c]) => [remap(a), remap(b), remap(c)]);
        return true;
      }
    }
  }

  undo(): boolean {
    const prev = this.history.pop();
    if (!prev) return false;
    this.draft = prev;
    this.persistDraft();
    return true;
  }

  // -- service calls ------------------------------------------------------

  /** POST /fit once per draft element; failures become per-element chips. */
  async requestFit(resolution = "low"): Promise<FitResult[]> {
    const d = this.draft;
    const elements: FitResult["element"][] = [
      ...d.vertices
        .map((v, i) => ({ index: i, v }))
        .filter(({ index }) => this.isPureVertex(index))
        .map(({ v }) => ({ kind: "vertex" as const, corners: [v] })),
      ...d.edges.map(([a, b]) => ({
        kind: "edge" as const,
        corners: [d.vertices[a], d.vertices[b]],
      })),
      ...d.triangles.map(([a, b, c]) => ({
        kind: "triangle" as const,
        corners: [d.vertices[a], d.vertices[b], d.vertices[c]],
      })),
    ];
    const fits: FitResult[] = [];
    for (const element of elements) {
      try {
        const { mesh, radii } = await this.client.postFit(
          element.kind,
          element.corners,
          resolution,
        );
        fits.push({ element, mesh, radii });
      } catch (err) {
        if (err instanceof ApiError) {
          fits.push({ element, error: err.message });
        } else {
          // network trouble: keep the draft, surface a banner
          this.hint = "service unreachable";
          throw err;
        }
      }
    }
    this.fits = fits;
    return fits;
  }

  private isPureVertex(index: number): boolean {
    return (
      !this.draft.edges.some((e) => e.includes(index)) &&
      !this.draft.triangles.some((t) => t.includes(index))
    );
  }

  get canOptimize(): boolean {
    return this.draft.vertices.length > 0;
  }

  /**
   * Start the full pipeline from the draft vertices as seeds and follow
   * the job to completion; the final document is fetched for overlay.
   */
  async seedAndOptimize(
    options: { delta?: number; maxIterations?: number; fitResolution?: string } = {},
    onUpdate?: (status: JobStatus) => void,
    intervalMs = 500,
  ): Promise<JobStatus> {
    if (!this.canOptimize) {
      throw new Error("at least one seed vertex required");
    }
    const jobId = await this.client.postOptimize({
      seeds: this.draft.vertices,
      delta: options.delta,
      max_iterations: options.maxIterations,
      fit_resolution: options.fitResolution,
    });
    const status = await this.client.pollJob(
      jobId,
      (s) => {
        this.job = s;
        onUpdate?.(s);
      },
      intervalMs,
    );
    this.job = status;
    if (status.phase === "done") {
      this.document = await this.client.getDocument();
    }
    return status;
  }

  // -- persistence --------------------------------------------------------

  persistDraft(): void {
    this.store.setItem(DRAFT_KEY, JSON.stringify(this.draft));
  }

  restoreDraft(): void {
    const raw = this.store.getItem(DRAFT_KEY);
    if (raw === null) return;
    try {
      this.draft = JSON.parse(raw) as DraftSkeleton;
    } catch {
      this.store.removeItem(DRAFT_KEY);
    }
  }

  clearDraft(): void {
    this.draft = emptyDraft();
    this.history = [];
    this.store.removeItem(DRAFT_KEY);
  }
}
