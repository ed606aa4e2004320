/**
 * Browser entry point.
 *
 * Connects to the session service, folds pushes into the store, renders the
 * store with three.js and maps mouse gestures onto the two-cursor grab
 * protocol. Browsers cannot open raw TCP sockets, so the page talks to a
 * WebSocket-to-TCP bridge (e.g. `websockify 9901 localhost:9900`) named by
 * the `?ws=` query parameter.
 */

import * as THREE from "three";

import { CameraState, defaultCamera, orbitCamera, viewDistance } from "./camera.js";
import { SessionClient, Transport } from "./client.js";
import { CursorName, DragController, OutgoingCommand } from "./drag.js";
import {
  ToastQueue,
  connectionBanner,
  selectionLabel,
  setModeCommand,
  statusLine,
  toggleCollisionsCommand,
  toggleSpringsCommand,
  INTERACTION_MODES,
  PHYSICS_MODES,
} from "./hud.js";
import { SceneStore } from "./store.js";
import {
  keyframeCommands,
  playPauseCommand,
  scrubCommand,
} from "./timeline.js";
import { TransformJson } from "./protocol.js";
import { SceneView } from "./viewport.js";

function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.binaryType = "arraybuffer";
    let dataHandler: (chunk: Uint8Array) => void = () => undefined;
    let closeHandler: () => void = () => undefined;
    ws.onmessage = (ev) => {
      if (ev.data instanceof ArrayBuffer) {
        dataHandler(new Uint8Array(ev.data));
      }
    };
    ws.onclose = () => closeHandler();
    ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    ws.onopen = () =>
      resolve({
        send: (bytes) => ws.send(bytes),
        close: () => ws.close(),
        onData: (h) => {
          dataHandler = h;
        },
        onClose: (h) => {
          closeHandler = h;
        },
      });
  });
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  parent: HTMLElement,
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text) {
    node.textContent = text;
  }
  parent.appendChild(node);
  return node;
}

async function run(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const wsUrl = params.get("ws") ?? "ws://localhost:9901";

  const root = document.getElementById("app") ?? document.body;
  const banner = el("div", root);
  banner.className = "banner";
  banner.style.display = "none";
  const canvas = el("canvas", root);
  canvas.className = "viewport";
  const toolbar = el("div", root);
  toolbar.className = "toolbar";
  const timelineBar = el("div", root);
  timelineBar.className = "timeline";
  const statusEl = el("div", root);
  statusEl.className = "status";
  const toastBox = el("div", root);
  toastBox.className = "toasts";

  const store = new SceneStore();
  const view = new SceneView();
  const toasts = new ToastQueue();
  let camera: CameraState = defaultCamera();
  const drag = new DragController(camera, {
    widthPx: canvas.clientWidth || 960,
    heightPx: canvas.clientHeight || 600,
  });

  let client: SessionClient;
  try {
    client = new SessionClient(await webSocketTransport(wsUrl));
  } catch (err) {
    banner.style.display = "block";
    banner.textContent = `${(err as Error).message} - is the bridge running?`;
    return;
  }

  const send = (cmd: OutgoingCommand): void => {
    client.command(cmd.kind, cmd.payload).catch((err: Error) => {
      toasts.push(err.message, performance.now());
      if (drag.dragging) {
        drag.end(); // server refused: stop streaming poses it will reject
      }
    });
  };

  client.onPush = (push) => {
    store.apply(push);
  };
  client.onDisconnect = () => {
    banner.style.display = "block";
    banner.textContent = connectionBanner(false) ?? "";
  };
  const hello = await client.hello;
  document.title = `assembly viewport (${hello.role})`;

  // --- toolbar -----------------------------------------------------------
  for (const mode of PHYSICS_MODES) {
    const b = el("button", toolbar, `physics: ${mode}`);
    b.onclick = () => send(setModeCommand(mode, undefined));
  }
  for (const mode of INTERACTION_MODES) {
    const b = el("button", toolbar, mode);
    b.onclick = () => send(setModeCommand(undefined, mode));
  }
  const collisionsBtn = el("button", toolbar, "collisions");
  collisionsBtn.onclick = () => send(toggleCollisionsCommand());
  const springsBtn = el("button", toolbar, "springs");
  springsBtn.onclick = () => send(toggleSpringsCommand());

  // --- timeline ----------------------------------------------------------
  const playBtn = el("button", timelineBar, "play");
  const scrub = el("input", timelineBar);
  scrub.type = "range";
  scrub.min = "0";
  scrub.max = "1000";
  scrub.step = "1";
  const keyBtn = el("button", timelineBar, "keyframe");
  const timeLabel = el("span", timelineBar, "t=0.00");
  let scrubbing = false;
  scrub.oninput = () => {
    scrubbing = true;
    const duration = store.doc?.duration ?? 0;
    send(scrubCommand((Number(scrub.value) / 1000) * duration, duration));
  };
  scrub.onchange = () => {
    scrubbing = false;
  };
  playBtn.onclick = () => send(playPauseCommand(store.status.playing));
  keyBtn.onclick = () => {
    for (const cmd of keyframeCommands(store.status.selection)) {
      send(cmd);
    }
  };

  // --- renderer ----------------------------------------------------------
  const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
  const threeCamera = new THREE.PerspectiveCamera(camera.fovDegrees, 16 / 9, 0.05, 500);
  const resize = (): void => {
    const w = canvas.clientWidth || canvas.parentElement?.clientWidth || 960;
    const h = canvas.clientHeight || 600;
    renderer.setSize(w, h, false);
    threeCamera.aspect = w / h;
    threeCamera.updateProjectionMatrix();
    drag.setViewport(w, h);
  };
  window.addEventListener("resize", resize);
  resize();

  // --- pointer mapping ---------------------------------------------------
  const raycaster = new THREE.Raycaster();
  let orbiting = false;
  let lastPointer = { x: 0, y: 0 };
  let movedSincePress = false;
  let pressedObject: number | null = null;

  const pickObject = (ev: PointerEvent): number | null => {
    const rect = canvas.getBoundingClientRect();
    const nx = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const ny = -(((ev.clientY - rect.top) / rect.height) * 2 - 1);
    raycaster.setFromCamera(new THREE.Vector2(nx, ny), threeCamera);
    const bodies: THREE.Object3D[] = [];
    view.scene.traverse((o) => {
      if (o.userData["objectId"] !== undefined && o.visible) {
        bodies.push(o);
      }
    });
    const hit = raycaster.intersectObjects(bodies, false)[0];
    return hit ? (hit.object.userData["objectId"] as number) : null;
  };

  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    lastPointer = { x: ev.clientX, y: ev.clientY };
    movedSincePress = false;
    const id = pickObject(ev);
    pressedObject = id;
    if (id !== null) {
      const obj = store.object(id);
      if (obj !== undefined) {
        const cursor: CursorName = ev.button === 2 ? "right" : "left";
        send(drag.begin(cursor, id, obj.state.transform, { x: ev.clientX, y: ev.clientY }));
      }
    } else {
      orbiting = true;
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    const dx = ev.clientX - lastPointer.x;
    const dy = ev.clientY - lastPointer.y;
    if (dx !== 0 || dy !== 0) {
      movedSincePress = true;
    }
    if (drag.dragging) {
      drag.pointerMove({ x: ev.clientX, y: ev.clientY }, ev.shiftKey);
    } else if (orbiting) {
      camera = orbitCamera(camera, dx * 0.006, dy * 0.006);
      drag.setCamera(camera);
    }
    lastPointer = { x: ev.clientX, y: ev.clientY };
  });
  canvas.addEventListener("pointerup", (ev) => {
    orbiting = false;
    const endCmd = drag.end();
    if (endCmd !== null) {
      send(endCmd);
    }
    if (!movedSincePress) {
      // a clean click selects (empty click clears)
      send({ kind: "select", payload: { ids: pressedObject === null ? [] : [pressedObject] } });
    }
    pressedObject = null;
  });
  canvas.addEventListener(
    "wheel",
    (ev) => {
      ev.preventDefault();
      const ticks = -Math.sign(ev.deltaY);
      if (drag.dragging) {
        drag.wheel(ticks);
      } else {
        // dolly the camera toward/away from its target
        const d = viewDistance(camera);
        const next = Math.max(0.5, d - ticks * 0.5);
        const scale = next / d;
        camera = {
          ...camera,
          position: [
            camera.target[0] + (camera.position[0] - camera.target[0]) * scale,
            camera.target[1] + (camera.position[1] - camera.target[1]) * scale,
            camera.target[2] + (camera.position[2] - camera.target[2]) * scale,
          ],
        };
        drag.setCamera(camera);
      }
    },
    { passive: false },
  );

  // --- frame loop --------------------------------------------------------
  const dragTargets = new Map<string, TransformJson>();
  const frame = (): void => {
    const pose = drag.tick();
    if (pose !== null) {
      send(pose); // every display frame: comfortably above the 30 Hz floor
    }
    dragTargets.clear();
    const target = drag.targetTransform();
    if (target !== null && drag.dragging) {
      dragTargets.set("left", target);
      dragTargets.set("right", target);
    }
    view.sync(store, dragTargets);

    threeCamera.position.set(...camera.position);
    threeCamera.up.set(...camera.up);
    threeCamera.lookAt(...camera.target);
    threeCamera.fov = camera.fovDegrees;
    threeCamera.updateProjectionMatrix();

    // HUD refresh from server truth only
    statusEl.textContent = `${statusLine(store.status, store.stats)} | ${selectionLabel(
      store.status.selection,
    )} | step ${store.step}`;
    playBtn.textContent = store.status.playing ? "pause" : "play";
    const duration = store.doc?.duration ?? 0;
    if (!scrubbing && duration > 0) {
      scrub.value = String(Math.round((store.status.time / duration) * 1000));
    }
    timeLabel.textContent = `t=${store.status.time.toFixed(2)} / ${duration.toFixed(2)}`;
    toastBox.replaceChildren(
      ...toasts.active(performance.now()).map((t) => {
        const d = document.createElement("div");
        d.className = "toast";
        d.textContent = t.message;
        return d;
      }),
    );

    renderer.render(view.scene, threeCamera);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

run().catch((err) => {
  const banner = document.createElement("div");
  banner.className = "banner";
  banner.textContent = String(err);
  document.body.prepend(banner);
});
