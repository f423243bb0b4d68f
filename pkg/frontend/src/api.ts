/**
 * Typed client for the skeleton service.
 *
 * Binary mesh payloads are base64-wrapped little-endian buffers:
 * u32 vertex count, u32 triangle count, f64 positions (3 per vertex),
 * u32 indices (3 per triangle).
 */

import type {
  DraftSkeleton,
  ElementKind,
  JobStatus,
  MedialAxis,
  Mesh,
  MsdDocument,
  RadiiStats,
  Vec3,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

function base64ToBytes(payload: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(payload);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // node (tests)
  return new Uint8Array(Buffer.from(payload, "base64"));
}

function bytesToBase64(bytes: Uint8Array): string {
  if (typeof btoa === "function") {
    let bin = "";
    for (const b of bytes) bin += String.fromCharCode(b);
    return btoa(bin);
  }
  return Buffer.from(bytes).toString("base64");
}

export function unpackMesh(payload: string): Mesh {
  const bytes = base64ToBytes(payload);
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const nVertices = view.getUint32(0, true);
  const nTriangles = view.getUint32(4, true);
  const vertices = new Float64Array(3 * nVertices);
  let off = 8;
  for (let i = 0; i < vertices.length; i++, off += 8) {
    vertices[i] = view.getFloat64(off, true);
  }
  const triangles = new Uint32Array(3 * nTriangles);
  for (let i = 0; i < triangles.length; i++, off += 4) {
    triangles[i] = view.getUint32(off, true);
  }
  return { vertices, triangles, nVertices, nTriangles };
}

/** Inverse of unpackMesh; used by tests and never by the editor itself. */
export function packMesh(mesh: Mesh): string {
  const bytes = new Uint8Array(
    8 + 8 * mesh.vertices.length + 4 * mesh.triangles.length,
  );
  const view = new DataView(bytes.buffer);
  view.setUint32(0, mesh.nVertices, true);
  view.setUint32(4, mesh.nTriangles, true);
  let off = 8;
  for (const x of mesh.vertices) {
    view.setFloat64(off, x, true);
    off += 8;
  }
  for (const t of mesh.triangles) {
    view.setUint32(off, t, true);
    off += 4;
  }
  return bytesToBase64(bytes);
}

export interface OptimizeParams {
  seeds: Vec3[];
  delta?: number;
  max_iterations?: number;
  fit_resolution?: string;
  refine?: boolean;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      const detail =
        typeof body === "object" && body !== null && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : res.statusText;
      throw new ApiError(detail, res.status);
    }
    return body as T;
  }

  async getMesh(): Promise<Mesh> {
    const data = await this.request<{ mesh: string }>("/mesh");
    return unpackMesh(data.mesh);
  }

  async getMedial(): Promise<MedialAxis> {
    return this.request<MedialAxis>("/medial");
  }

  async postSkeleton(draft: DraftSkeleton): Promise<void> {
    await this.request("/skeleton", {
      method: "POST",
      body: JSON.stringify(draft),
    });
  }

  async postFit(
    kind: ElementKind,
    corners: Vec3[],
    resolution = "low",
  ): Promise<{ mesh: Mesh; radii: RadiiStats }> {
    const data = await this.request<{ mesh: string; radii: RadiiStats }>(
      "/fit",
      {
        method: "POST",
        body: JSON.stringify({ element: { kind, corners }, resolution }),
      },
    );
    return { mesh: unpackMesh(data.mesh), radii: data.radii };
  }

  async postOptimize(params: OptimizeParams): Promise<string> {
    const data = await this.request<{ job: string }>("/optimize", {
      method: "POST",
      body: JSON.stringify(params),
    });
    return data.job;
  }

  async getJob(jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(`/jobs/${jobId}`);
  }

  async getDocument(): Promise<MsdDocument> {
    return this.request<MsdDocument>("/msd");
  }

  async getReconstruction(grid = 64): Promise<Mesh> {
    const data = await this.request<{ mesh: string }>(
      `/reconstruction?grid=${grid}`,
    );
    return unpackMesh(data.mesh);
  }

  /**
   * Poll a job until it reaches a terminal phase; reports every update.
   */
  async pollJob(
    jobId: string,
    onUpdate?: (status: JobStatus) => void,
    intervalMs = 500,
  ): Promise<JobStatus> {
    for (;;) {
      const status = await this.getJob(jobId);
      onUpdate?.(status);
      if (status.phase === "done" || status.phase === "failed") {
        return status;
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
