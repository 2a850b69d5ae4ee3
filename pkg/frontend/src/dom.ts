import { CollectionApi, PngDecoder } from "./api";
import { INSTRUCTIONS } from "./instructions";
import { KeyValueStore, SessionController, UiSnapshot } from "./state";
import { Raster } from "./types";

/** Decode a base64 PNG through an offscreen canvas. */
export const decodePngInBrowser: PngDecoder = async (base64Png) => {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("failed to decode PNG"));
    img.src = "data:image/png;base64," + base64Png;
  });
  const scratch = document.createElement("canvas");
  scratch.width = img.naturalWidth;
  scratch.height = img.naturalHeight;
  const ctx = scratch.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  ctx.drawImage(img, 0, 0);
  const data = ctx.getImageData(0, 0, scratch.width, scratch.height);
  return { width: scratch.width, height: scratch.height, pixels: data.data };
};

function el<T extends HTMLElement>(doc: Document, id: string): T {
  const node = doc.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

/**
 * Wire the page to a SessionController. The markup contract is the set of
 * element ids used below (see index.html).
 */
export function mountApp(
  doc: Document,
  api: CollectionApi,
  store: KeyValueStore,
): SessionController {
  const views = {
    instructions: el<HTMLElement>(doc, "view-instructions"),
    study: el<HTMLElement>(doc, "view-study"),
    done: el<HTMLElement>(doc, "view-done"),
  };
  const list = el<HTMLUListElement>(doc, "instruction-list");
  list.replaceChildren(
    ...INSTRUCTIONS.map((text) => {
      const item = doc.createElement("li");
      item.textContent = text;
      return item;
    }),
  );
  const startBtn = el<HTMLButtonElement>(doc, "start");
  const canvas = el<HTMLCanvasElement>(doc, "stimulus");
  const counter = el<HTMLElement>(doc, "click-counter");
  const progress = el<HTMLElement>(doc, "progress");
  const caption = el<HTMLTextAreaElement>(doc, "caption");
  const submitBtn = el<HTMLButtonElement>(doc, "submit");
  const skipBtn = el<HTMLButtonElement>(doc, "skip");
  const errorBox = el<HTMLElement>(doc, "error");

  const drawCanvas = (raster: Raster | null) => {
    if (!raster) return;
    canvas.width = raster.width;
    canvas.height = raster.height;
    const ctx = canvas.getContext("2d");
    if (!ctx) return; // headless test environment
    const image = new ImageData(
      new Uint8ClampedArray(raster.pixels), raster.width, raster.height,
    );
    ctx.putImageData(image, 0, 0);
  };

  const render = (s: UiSnapshot) => {
    views.instructions.hidden = s.phase !== "instructions";
    views.study.hidden = !(s.phase === "exploring" || s.phase === "submitting");
    views.done.hidden = s.phase !== "done";
    counter.textContent = `${s.clicksUsed}/${s.maxClicks}`;
    progress.textContent = s.totalImages
      ? `image ${Math.min(s.imagesDone + 1, s.totalImages)} of ${s.totalImages}`
      : "";
    canvas.style.pointerEvents = controller.clickEnabled() ? "auto" : "none";
    canvas.setAttribute(
      "data-clicks-enabled", controller.clickEnabled() ? "true" : "false",
    );
    if (caption.value !== s.captionDraft) caption.value = s.captionDraft;
    submitBtn.disabled = !controller.submitEnabled();
    skipBtn.disabled = s.phase !== "exploring";
    errorBox.hidden = s.lastError === null;
    errorBox.textContent = s.lastError
      ? `${s.lastError} — please try again`
      : "";
    drawCanvas(s.canvas);
  };

  const controller = new SessionController(api, store, render);

  startBtn.addEventListener("click", () => void controller.start());
  canvas.addEventListener("click", (event: MouseEvent) => {
    const rect = canvas.getBoundingClientRect();
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    void controller.handleClick(x, y);
  });
  caption.addEventListener("input", () => controller.setCaption(caption.value));
  submitBtn.addEventListener("click", () => void controller.submit());
  skipBtn.addEventListener("click", () => void controller.skip());

  void controller.load();
  return controller;
}
