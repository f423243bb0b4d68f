import { describe, expect, it, vi } from "vitest";
import { ServiceClient, packMesh } from "../src/api.js";
import { EditorSession, MemoryStore } from "../src/session.js";
import type { MedialAxis, Mesh } from "../src/types.js";

const axis: MedialAxis = {
  vertices: [
    [0, 0, 0],
    [1, 0, 0],
    [2, 0, 0],
  ],
  edges: [
    [0, 1],
    [1, 2],
  ],
  triangles: [],
};

function sphereStub(): Mesh {
  return {
    vertices: new Float64Array([0, 0, 1, 0, 1, 0, 1, 0, 0]),
    triangles: new Uint32Array([0, 1, 2]),
    nVertices: 3,
    nTriangles: 1,
  };
}

function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: () => Promise.resolve(body),
  } as unknown as Response;
}

function makeSession(fetchFn: typeof fetch = fetch, store = new MemoryStore()) {
  return new EditorSession(new ServiceClient("", fetchFn), axis, 0.25, store);
}

describe("annotation", () => {
  it("snaps added vertices onto the medial axis", () => {
    const s = makeSession();
    expect(s.annotate({ type: "add-vertex", pick: [0.5, 0.2, 0] })).toBe(true);
    expect(s.draft.vertices).toEqual([[0.5, 0, 0]]);
  });

  it("rejects picks beyond the snap tolerance with a hint", () => {
    const s = makeSession();
    expect(s.annotate({ type: "add-vertex", pick: [0.5, 2, 0] })).toBe(false);
    expect(s.draft.vertices).toHaveLength(0);
    expect(s.hint).toContain("missed");
  });

  it("adds edges between existing vertices only", () => {
    const s = makeSession();
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    s.annotate({ type: "add-vertex", pick: [1, 0, 0] });
    expect(s.annotate({ type: "add-edge", a: 0, b: 1 })).toBe(true);
    expect(s.annotate({ type: "add-edge", a: 0, b: 5 })).toBe(false);
    expect(s.annotate({ type: "add-edge", a: 1, b: 1 })).toBe(false);
    expect(s.draft.edges).toEqual([[0, 1]]);
  });

  it("cascades vertex deletion into incident elements and reindexes", () => {
    const s = makeSession();
    for (const x of [0, 1, 2]) {
      s.annotate({ type: "add-vertex", pick: [x, 0, 0] });
    }
    s.annotate({ type: "add-edge", a: 0, b: 1 });
    s.annotate({ type: "add-edge", a: 1, b: 2 });
    s.annotate({ type: "add-triangle", a: 0, b: 1, c: 2 });
    s.annotate({ type: "delete", vertex: 1 });
    expect(s.draft.vertices).toEqual([
      [0, 0, 0],
      [2, 0, 0],
    ]);
    expect(s.draft.edges).toHaveLength(0);
    expect(s.draft.triangles).toHaveLength(0);
  });

  it("undo restores the previous draft, bounded history", () => {
    const s = makeSession();
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    s.annotate({ type: "add-vertex", pick: [1, 0, 0] });
    expect(s.undo()).toBe(true);
    expect(s.draft.vertices).toHaveLength(1);
    expect(s.undo()).toBe(true);
    expect(s.draft.vertices).toHaveLength(0);
    expect(s.undo()).toBe(false);
  });
});

describe("fitting", () => {
  it("fits one primitive per element, skipping vertices used by edges", async () => {
    const bodies: unknown[] = [];
    const fetchFn = vi.fn(async (_url: string, init?: RequestInit) => {
      bodies.push(JSON.parse(String(init?.body)));
      return jsonResponse(200, {
        mesh: packMesh(sphereStub()),
        radii: { min: 0.1, max: 0.3, mean: 0.2 },
      });
    });
    const s = makeSession(fetchFn as unknown as typeof fetch);
    for (const x of [0, 1, 2]) {
      s.annotate({ type: "add-vertex", pick: [x, 0, 0] });
    }
    s.annotate({ type: "add-edge", a: 0, b: 1 });
    const fits = await s.requestFit();
    // vertex 2 is pure; vertices 0/1 are covered by the edge element
    expect(fits).toHaveLength(2);
    expect(fits.map((f) => f.element.kind).sort()).toEqual(["edge", "vertex"]);
    expect(fits.every((f) => f.mesh && f.radii)).toBe(true);
    expect(bodies).toHaveLength(2);
  });

  it("turns per-element rejections into error chips, others still render", async () => {
    let call = 0;
    const fetchFn = vi.fn(async () =>
      call++ === 0
        ? jsonResponse(422, { detail: "element outside the mesh" })
        : jsonResponse(200, {
            mesh: packMesh(sphereStub()),
            radii: { min: 0.1, max: 0.3, mean: 0.2 },
          }),
    );
    const s = makeSession(fetchFn as unknown as typeof fetch);
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    s.annotate({ type: "add-vertex", pick: [2, 0, 0] });
    const fits = await s.requestFit();
    expect(fits).toHaveLength(2);
    expect(fits[0].error).toContain("outside");
    expect(fits[1].mesh).toBeDefined();
  });

  it("keeps the draft when the service is unreachable", async () => {
    const fetchFn = vi.fn(async () => {
      throw new TypeError("fetch failed");
    });
    const s = makeSession(fetchFn as unknown as typeof fetch);
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    await expect(s.requestFit()).rejects.toThrow("fetch failed");
    expect(s.draft.vertices).toHaveLength(1);
    expect(s.hint).toBe("service unreachable");
  });
});

describe("optimization", () => {
  it("refuses to start without seeds", async () => {
    const s = makeSession();
    expect(s.canOptimize).toBe(false);
    await expect(s.seedAndOptimize()).rejects.toThrow("seed");
  });

  it("submits seeds, polls to done, and fetches the final document", async () => {
    const phases = ["fitting", "optimizing", "done"];
    let poll = 0;
    const doc = {
      format_version: 1,
      skeleton: { vertices: [[0, 0, 0]], edges: [], triangles: [] },
      primitives: [],
      metadata: {},
    };
    const fetchFn = vi.fn(async (url: string) => {
      if (url === "/optimize") return jsonResponse(200, { job: "j7" });
      if (url.startsWith("/jobs/")) {
        return jsonResponse(200, {
          id: "j7",
          phase: phases[Math.min(poll++, phases.length - 1)],
          progress: poll / phases.length,
          trace: [{ phase: "fitting" }],
        });
      }
      if (url === "/msd") return jsonResponse(200, doc);
      throw new Error(`unexpected ${url}`);
    });
    const s = makeSession(fetchFn as unknown as typeof fetch);
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    const seen: string[] = [];
    const final = await s.seedAndOptimize({}, (st) => seen.push(st.phase), 1);
    expect(final.phase).toBe("done");
    expect(seen).toEqual(phases);
    expect(s.document).toEqual(doc);
  });

  it("surfaces job failures with phase and message", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      if (url === "/optimize") return jsonResponse(200, { job: "j8" });
      return jsonResponse(200, {
        id: "j8",
        phase: "failed",
        progress: 0.4,
        trace: [],
        error: "fitting: ray misses the target mesh",
      });
    });
    const s = makeSession(fetchFn as unknown as typeof fetch);
    s.annotate({ type: "add-vertex", pick: [0, 0, 0] });
    const final = await s.seedAndOptimize({}, undefined, 1);
    expect(final.phase).toBe("failed");
    expect(final.error).toContain("fitting");
    expect(s.document).toBeNull();
  });
});

describe("persistence", () => {
  it("survives a reload through the draft store", () => {
    const store = new MemoryStore();
    const s1 = makeSession(fetch, store);
    s1.annotate({ type: "add-vertex", pick: [0.5, 0, 0] });
    s1.annotate({ type: "add-vertex", pick: [1.5, 0, 0] });
    s1.annotate({ type: "add-edge", a: 0, b: 1 });
    // simulated reload: a fresh session over the same store
    const s2 = makeSession(fetch, store);
    s2.restoreDraft();
    expect(s2.draft).toEqual(s1.draft);
  });

  it("restores the last optimized document on open", async () => {
    const doc = {
      format_version: 1,
      skeleton: { vertices: [[1, 0, 0]], edges: [], triangles: [] },
      primitives: [],
      metadata: {},
    };
    const fetchFn = vi.fn(async (url: string) => {
      if (url === "/mesh") {
        return jsonResponse(200, { mesh: packMesh(sphereStub()) });
      }
      if (url === "/medial") return jsonResponse(200, axis);
      if (url === "/msd") return jsonResponse(200, doc);
      throw new Error(`unexpected ${url}`);
    });
    const { session, mesh } = await EditorSession.open(
      new ServiceClient("", fetchFn as unknown as typeof fetch),
    );
    expect(mesh.nVertices).toBe(3);
    expect(session.document).toEqual(doc);
  });

  it("opens cleanly when no document exists yet", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      if (url === "/mesh") {
        return jsonResponse(200, { mesh: packMesh(sphereStub()) });
      }
      if (url === "/medial") return jsonResponse(200, axis);
      return jsonResponse(404, { detail: "no document yet" });
    });
    const { session } = await EditorSession.open(
      new ServiceClient("", fetchFn as unknown as typeof fetch),
    );
    expect(session.document).toBeNull();
  });
});
