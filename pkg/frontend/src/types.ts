/** Shared wire and editor types. */

export type Vec3 = [number, number, number];

export type ElementKind = "vertex" | "edge" | "triangle";

/** Decoded triangle mesh (float shadow geometry; exact meshes stay server-side). */
export interface Mesh {
  vertices: Float64Array; // 3 * nVertices
  triangles: Uint32Array; // 3 * nTriangles
  nVertices: number;
  nTriangles: number;
}

/** Medial axis as served by GET /medial. */
export interface MedialAxis {
  vertices: Vec3[];
  edges: [number, number][];
  triangles: [number, number, number][];
}

/** Draft skeleton being annotated in the editor. */
export interface DraftSkeleton {
  vertices: Vec3[];
  edges: [number, number][];
  triangles: [number, number, number][];
}

export interface RadiiStats {
  min: number;
  max: number;
  mean: number;
}

/** One fitted primitive, or the error that kept it from fitting. */
export interface FitResult {
  element: { kind: ElementKind; corners: Vec3[] };
  mesh?: Mesh;
  radii?: RadiiStats;
  error?: string;
}

export interface JobTraceEntry {
  phase: string;
  [key: string]: unknown;
}

export interface JobStatus {
  id: string;
  phase: string;
  progress: number;
  trace: JobTraceEntry[];
  error?: string;
}

export interface PrimitiveRecord {
  element_kind: ElementKind;
  corners: number[][];
  resolution: string;
  epsilon: number;
  radii: number[];
}

export interface MsdDocument {
  format_version: number;
  skeleton: {
    vertices: number[][];
    edges: number[][];
    triangles: number[][];
  };
  primitives: PrimitiveRecord[];
  metadata: Record<string, unknown>;
}
