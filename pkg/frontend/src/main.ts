/** Browser entry point: wires the session, viewer, and key bindings. */

import * as THREE from "three";
import { ServiceClient } from "./api.js";
import { EditorSession } from "./session.js";
import { Viewer } from "./viewer.js";
import type { Vec3 } from "./types.js";

const app = document.querySelector<HTMLDivElement>("#app");
if (!app) throw new Error("#app container missing");

const status = document.createElement("div");
status.className = "status";
app.appendChild(status);

const viewport = document.createElement("div");
viewport.className = "viewport";
app.appendChild(viewport);

function setStatus(text: string): void {
  status.textContent = text;
}

/** Unproject a mouse event onto the medial plane (z = 0) as the pick ray
 * hint; the session itself snaps the result onto the medial axis. */
function pickPoint(ev: MouseEvent, host: HTMLElement, viewer: Viewer): Vec3 | null {
  const rect = host.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
  const y = -((ev.clientY - rect.top) / rect.height) * 2 + 1;
  const near = new THREE.Vector3(x, y, -1).unproject(viewer.camera);
  const far = new THREE.Vector3(x, y, 1).unproject(viewer.camera);
  const dz = far.z - near.z;
  if (dz === 0) return null;
  const t = -near.z / dz;
  if (t < 0 || t > 1) return null;
  const p = near.lerp(far, t);
  return [p.x, p.y, p.z];
}

async function boot(): Promise<void> {
  const client = new ServiceClient("/api");
  setStatus("loading…");
  const { session, mesh } = await EditorSession.open(
    client,
    window.localStorage,
  );
  const viewer = new Viewer(viewport);
  viewer.setTarget(mesh);
  viewer.setMedial(session.medial);
  viewer.setDraft(session.draft);
  if (session.document) viewer.setResult(session.document);
  setStatus(`ready — ${session.draft.vertices.length} draft vertices`);

  viewport.addEventListener("dblclick", (ev) => {
    const pick = pickPoint(ev, viewport, viewer);
    if (!pick) return;
    if (session.annotate({ type: "add-vertex", pick })) {
      viewer.setDraft(session.draft);
      setStatus(`${session.draft.vertices.length} draft vertices`);
    } else {
      setStatus(session.hint);
    }
  });

  window.addEventListener("keydown", async (ev) => {
    if (ev.key === "z" && (ev.ctrlKey || ev.metaKey)) {
      session.undo();
      viewer.setDraft(session.draft);
    } else if (ev.key === "f") {
      setStatus("fitting…");
      try {
        const fits = await session.requestFit();
        viewer.setFits(fits.flatMap((f) => (f.mesh ? [f.mesh] : [])));
        const failed = fits.filter((f) => f.error).length;
        setStatus(
          failed
            ? `${fits.length - failed} primitives, ${failed} failed`
            : `${fits.length} primitives fitted`,
        );
      } catch {
        setStatus(session.hint || "fit failed");
      }
    } else if (ev.key === "o") {
      if (!session.canOptimize) {
        setStatus("add at least one seed vertex first");
        return;
      }
      setStatus("optimizing…");
      const final = await session.seedAndOptimize({}, (s) =>
        setStatus(`${s.phase} ${(s.progress * 100).toFixed(0)}%`),
      );
      if (final.phase === "done" && session.document) {
        const recon = await client.getReconstruction(48);
        viewer.setResult(session.document, recon);
        setStatus("done");
      } else {
        setStatus(`failed: ${final.error ?? "unknown"}`);
      }
    }
  });

  const animate = () => {
    viewer.render();
    requestAnimationFrame(animate);
  };
  animate();
}

boot().catch((err) => setStatus(`startup failed: ${err}`));
