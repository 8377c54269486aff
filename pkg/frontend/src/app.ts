/** Browser entry point: wires the session controller, the two mesh
 * viewers, and the answer widgets into the page.
 *
 * The page renders one question at a time. Both viewers stay mounted
 * for the whole session; only their meshes change. Browser back
 * navigation is disabled because a submitted answer cannot be
 * withdrawn, and the completion screen shows the session id as the
 * participant's receipt.
 */

import * as THREE from "three";
import { ApiClient } from "./api.js";
import { SessionController, type SessionState } from "./session.js";
import { MeshViewer } from "./viewer.js";
import {
  errorBanner,
  formAnswerWidget,
  purchaseWidget,
  type AnswerWidget,
} from "./widgets.js";
import type { FormChoice, PurchaseChoice, Question } from "./types.js";

const MESH_RESOLUTION = 24;

export function mountApp(
  root: HTMLElement,
  baseUrl: string,
  studyId: string,
): SessionController {
  const api = new ApiClient(baseUrl);
  const controller = new SessionController(api, studyId);

  root.innerHTML = "";
  const banner = errorBanner();
  const stage = document.createElement("div");
  stage.className = "stage";
  const answers = document.createElement("div");
  answers.className = "answers";
  root.append(banner.root, stage, answers);

  const left = makePane(stage, "left");
  const right = makePane(stage, "right");

  let shownPair: string | null = null;

  controller.subscribe((state: SessionState) => {
    const message = controller.banner;
    if (message) banner.show(message);
    else banner.clear();

    switch (state.kind) {
      case "loading":
      case "submitting":
        break;
      case "question":
        renderQuestion(state.view.question, state.view.profileLabels);
        break;
      case "finished":
        renderReceipt(state.receipt);
        break;
      case "failed":
        renderFailure(state.message);
        break;
    }
  });

  function renderQuestion(
    question: Question,
    profiles?: [[string, string], [string, string]],
  ) {
    const pairKey = question.form_pair.join(",");
    if (pairKey !== shownPair) {
      shownPair = pairKey;
      void loadMesh(left, question.mesh_urls[0]);
      void loadMesh(right, question.mesh_urls[1]);
    }
    answers.innerHTML = "";
    let widget: AnswerWidget;
    if (question.question_type === "form") {
      widget = formAnswerWidget((value) => submit(value));
    } else {
      const [lp, rp] = profiles!;
      widget = purchaseWidget(lp, rp, (value) => submit(value));
    }
    answers.append(widget.root);
  }

  // A recoverable rejection re-emits the same question state, which
  // rebuilds the widget unlocked with the banner above it.
  function submit(value: FormChoice | PurchaseChoice) {
    void controller.answer(value);
  }

  async function loadMesh(pane: Pane, url: string) {
    pane.status.textContent = "Loading model";
    pane.retry.hidden = true;
    try {
      const data = await api.fetchMesh(url, MESH_RESOLUTION);
      pane.viewer.load(data);
      pane.status.textContent = "";
      drawPane(pane);
    } catch (exc) {
      pane.status.textContent = "The model failed to load.";
      pane.retry.hidden = false;
      pane.retry.onclick = () => void loadMesh(pane, url);
    }
  }

  function renderReceipt(receipt: string) {
    answers.innerHTML = "";
    stage.innerHTML = "";
    const done = document.createElement("section");
    done.className = "receipt";
    const h = document.createElement("h2");
    h.textContent = "Thank you, your answers are in.";
    const p = document.createElement("p");
    p.append(
      document.createTextNode("Your receipt id is "),
      code(receipt),
      document.createTextNode(". Keep it in case you need to reference this session."),
    );
    done.append(h, p);
    root.append(done);
  }

  function renderFailure(message: string) {
    answers.innerHTML = "";
    const p = document.createElement("p");
    p.className = "fatal";
    p.textContent = `The survey stopped: ${message}`;
    answers.append(p);
  }

  disableBackNavigation();
  void controller.start();
  return controller;
}

interface Pane {
  viewer: MeshViewer;
  canvas: HTMLCanvasElement;
  status: HTMLElement;
  retry: HTMLButtonElement;
  renderer: THREE.WebGLRenderer | null;
}

function makePane(stage: HTMLElement, side: "left" | "right"): Pane {
  const wrap = document.createElement("figure");
  wrap.className = `pane pane-${side}`;
  const canvas = document.createElement("canvas");
  canvas.width = 480;
  canvas.height = 360;
  const status = document.createElement("figcaption");
  const retry = document.createElement("button");
  retry.type = "button";
  retry.textContent = "Try again";
  retry.hidden = true;
  wrap.append(canvas, status, retry);
  stage.append(wrap);

  const viewer = new MeshViewer();
  let renderer: THREE.WebGLRenderer | null = null;
  try {
    renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    renderer.setSize(canvas.width, canvas.height, false);
  } catch {
    // No WebGL context (headless or blocked); the page still works,
    // the viewer just has nothing to paint on.
    status.textContent = "3D preview is unavailable in this browser.";
  }

  const pane: Pane = { viewer, canvas, status, retry, renderer };
  attachRotation(pane);
  return pane;
}

function drawPane(pane: Pane) {
  if (pane.renderer) pane.viewer.render(pane.renderer);
}

function attachRotation(pane: Pane) {
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  pane.canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    pane.canvas.setPointerCapture(ev.pointerId);
  });
  pane.canvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const dYaw = (ev.clientX - lastX) * 0.01;
    const dPitch = (ev.clientY - lastY) * 0.01;
    lastX = ev.clientX;
    lastY = ev.clientY;
    pane.viewer.rotate(dYaw, dPitch);
    drawPane(pane);
  });
  pane.canvas.addEventListener("pointerup", () => {
    dragging = false;
  });
}

function disableBackNavigation() {
  if (typeof history === "undefined" || !history.pushState) return;
  history.pushState(null, "", location.href);
  window.addEventListener("popstate", () => {
    history.pushState(null, "", location.href);
  });
}

function code(content: string): HTMLElement {
  const el = document.createElement("code");
  el.textContent = content;
  return el;
}
