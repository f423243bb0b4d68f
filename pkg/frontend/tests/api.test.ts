import { describe, expect, it, vi } from "vitest";
import { ApiError, ServiceClient, packMesh, unpackMesh } from "../src/api.js";
import type { Mesh } from "../src/types.js";

function tetrahedron(): Mesh {
  return {
    vertices: new Float64Array([
      0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1,
    ]),
    triangles: new Uint32Array([0, 2, 1, 0, 1, 3, 1, 2, 3, 0, 3, 2]),
    nVertices: 4,
    nTriangles: 4,
  };
}

describe("mesh packing", () => {
  it("round trips through the documented binary layout", () => {
    const mesh = tetrahedron();
    const back = unpackMesh(packMesh(mesh));
    expect(back.nVertices).toBe(4);
    expect(back.nTriangles).toBe(4);
    expect(Array.from(back.vertices)).toEqual(Array.from(mesh.vertices));
    expect(Array.from(back.triangles)).toEqual(Array.from(mesh.triangles));
  });

  it("preserves full float64 precision", () => {
    const mesh: Mesh = {
      vertices: new Float64Array([0.1, 1 / 3, Math.PI]),
      triangles: new Uint32Array([]),
      nVertices: 1,
      nTriangles: 0,
    };
    const back = unpackMesh(packMesh(mesh));
    expect(back.vertices[0]).toBe(0.1);
    expect(back.vertices[1]).toBe(1 / 3);
    expect(back.vertices[2]).toBe(Math.PI);
  });
});

function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: () => Promise.resolve(body),
  } as unknown as Response;
}

describe("ServiceClient", () => {
  it("unpacks meshes from GET /mesh", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(200, { mesh: packMesh(tetrahedron()) }),
    );
    const client = new ServiceClient("", fetchFn as unknown as typeof fetch);
    const mesh = await client.getMesh();
    expect(mesh.nVertices).toBe(4);
    expect(fetchFn).toHaveBeenCalledWith("/mesh", expect.anything());
  });

  it("raises ApiError with the server detail on failure", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(422, { detail: "edge references a missing vertex" }),
    );
    const client = new ServiceClient("", fetchFn as unknown as typeof fetch);
    await expect(
      client.postSkeleton({ vertices: [], edges: [[0, 1]], triangles: [] }),
    ).rejects.toMatchObject({
      status: 422,
      message: "edge references a missing vertex",
    });
  });

  it("polls a job until it reaches a terminal phase", async () => {
    const phases = ["skeleton", "fitting", "optimizing", "done"];
    let call = 0;
    const fetchFn = vi.fn(async () =>
      jsonResponse(200, {
        id: "j1",
        phase: phases[Math.min(call++, phases.length - 1)],
        progress: call / phases.length,
        trace: [],
      }),
    );
    const client = new ServiceClient("", fetchFn as unknown as typeof fetch);
    const seen: string[] = [];
    const final = await client.pollJob("j1", (s) => seen.push(s.phase), 1);
    expect(final.phase).toBe("done");
    expect(seen).toEqual(phases);
  });

  it("is constructible with a base URL", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(200, { job: "abc" }));
    const client = new ServiceClient(
      "http://svc",
      fetchFn as unknown as typeof fetch,
    );
    const job = await client.postOptimize({ seeds: [[0, 0, 0]] });
    expect(job).toBe("abc");
    expect(fetchFn.mock.calls[0][0]).toBe("http://svc/optimize");
  });
});

describe("ApiError", () => {
  it("carries the HTTP status", () => {
    const err = new ApiError("nope", 404);
    expect(err.status).toBe(404);
    expect(err.message).toBe("nope");
  });
});
