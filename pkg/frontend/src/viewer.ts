/** Three.js scene management: target mesh, medial axis, draft skeleton,
 * fitted primitives, and the final optimized skeleton overlay. */

import * as THREE from "three";
import type { DraftSkeleton, MedialAxis, Mesh, MsdDocument } from "./types.js";

export function meshToGeometry(mesh: Mesh): THREE.BufferGeometry {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute(
    "position",
    new THREE.Float32BufferAttribute(Float32Array.from(mesh.vertices), 3),
  );
  geometry.setIndex(new THREE.Uint32BufferAttribute(mesh.triangles, 1));
  geometry.computeVertexNormals();
  return geometry;
}

function lineSegments(
  vertices: number[][],
  edges: number[][],
  color: number,
): THREE.LineSegments {
  const positions: number[] = [];
  for (const [a, b] of edges) {
    positions.push(...vertices[a], ...vertices[b]);
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute(
    "position",
    new THREE.Float32BufferAttribute(positions, 3),
  );
  return new THREE.LineSegments(
    geometry,
    new THREE.LineBasicMaterial({ color }),
  );
}

function pointCloud(
  vertices: number[][],
  color: number,
  size: number,
): THREE.Points {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute(
    "position",
    new THREE.Float32BufferAttribute(vertices.flat(), 3),
  );
  return new THREE.Points(
    geometry,
    new THREE.PointsMaterial({ color, size, sizeAttenuation: true }),
  );
}

export class Viewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private target: THREE.Mesh | null = null;
  private medial = new THREE.Group();
  private draftGroup = new THREE.Group();
  private fitGroup = new THREE.Group();
  private resultGroup = new THREE.Group();

  constructor(container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    container.appendChild(this.renderer.domElement);
    this.camera = new THREE.PerspectiveCamera(
      50,
      container.clientWidth / container.clientHeight,
      0.01,
      100,
    );
    this.camera.position.set(2.5, 2, 2.5);
    this.camera.lookAt(0, 0, 0);
    this.scene.background = new THREE.Color(0x10131a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.0);
    key.position.set(3, 4, 2);
    this.scene.add(key);
    this.scene.add(
      this.medial,
      this.draftGroup,
      this.fitGroup,
      this.resultGroup,
    );
  }

  setTarget(mesh: Mesh): void {
    if (this.target) this.scene.remove(this.target);
    this.target = new THREE.Mesh(
      meshToGeometry(mesh),
      new THREE.MeshStandardMaterial({
        color: 0x8899aa,
        transparent: true,
        opacity: 0.35,
        side: THREE.DoubleSide,
      }),
    );
    this.scene.add(this.target);
  }

  setMedial(axis: MedialAxis): void {
    this.medial.clear();
    this.medial.add(pointCloud(axis.vertices, 0x3377ff, 0.02));
    if (axis.edges.length) {
      this.medial.add(lineSegments(axis.vertices, axis.edges, 0x3377ff));
    }
  }

  setDraft(draft: DraftSkeleton): void {
    this.draftGroup.clear();
    if (draft.vertices.length) {
      this.draftGroup.add(pointCloud(draft.vertices, 0xffcc33, 0.04));
    }
    if (draft.edges.length) {
      this.draftGroup.add(lineSegments(draft.vertices, draft.edges, 0xffcc33));
    }
  }

  setFits(meshes: Mesh[]): void {
    this.fitGroup.clear();
    for (const m of meshes) {
      this.fitGroup.add(
        new THREE.Mesh(
          meshToGeometry(m),
          new THREE.MeshStandardMaterial({
            color: 0x44cc88,
            transparent: true,
            opacity: 0.65,
          }),
        ),
      );
    }
  }

  /** Overlay the optimized skeleton and its reconstruction preview. */
  setResult(doc: MsdDocument, reconstruction?: Mesh): void {
    this.resultGroup.clear();
    const sk = doc.skeleton;
    if (sk.vertices.length) {
      this.resultGroup.add(pointCloud(sk.vertices, 0xff5566, 0.05));
    }
    if (sk.edges.length) {
      this.resultGroup.add(lineSegments(sk.vertices, sk.edges, 0xff5566));
    }
    if (reconstruction) {
      this.resultGroup.add(
        new THREE.Mesh(
          meshToGeometry(reconstruction),
          new THREE.MeshStandardMaterial({ color: 0xcc6644, wireframe: true }),
        ),
      );
    }
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
