import { CollectionApi } from "./api";
import { cloneRaster, compositePatch } from "./raster";
import { ApiError, MAX_CLICKS, Phase, Raster } from "./types";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface UiSnapshot {
  phase: Phase;
  clicksUsed: number;
  maxClicks: number;
  captionDraft: string;
  canvas: Raster | null;
  imageId: string | null;
  totalImages: number;
  imagesDone: number;
  lastError: string | null;
}

const SESSION_KEY = "nevalab.session";

/**
 * Drives one participant session: instructions, click-to-reveal
 * exploration, caption entry, and the skip/continue flow.
 *
 * Clicks are queued and sent one at a time so reveals arrive in order;
 * the click counter always reflects the server's count, never an
 * optimistic guess. All rendering happens through the onChange callback.
 */
export class SessionController {
  phase: Phase = "instructions";
  clicksUsed = 0;
  captionDraft = "";
  canvas: Raster | null = null;
  imageId: string | null = null;
  totalImages = 0;
  imagesDone = 0;
  lastError: string | null = null;

  private sessionId: string | null = null;
  private clickQueue: Promise<void> = Promise.resolve();

  constructor(
    private api: CollectionApi,
    private store: KeyValueStore,
    private onChange: (snapshot: UiSnapshot) => void = () => {},
  ) {}

  snapshot(): UiSnapshot {
    return {
      phase: this.phase,
      clicksUsed: this.clicksUsed,
      maxClicks: MAX_CLICKS,
      captionDraft: this.captionDraft,
      canvas: this.canvas,
      imageId: this.imageId,
      totalImages: this.totalImages,
      imagesDone: this.imagesDone,
      lastError: this.lastError,
    };
  }

  private notify(): void {
    this.onChange(this.snapshot());
  }

  /** Entry point: resume a stored session or show the instructions. */
  async load(): Promise<void> {
    const stored = this.store.getItem(SESSION_KEY);
    if (stored) {
      this.sessionId = stored;
      try {
        await this.fetchCurrentImage();
        this.phase = "exploring";
        this.notify();
        return;
      } catch (error) {
        this.store.removeItem(SESSION_KEY);
        this.sessionId = null;
        if (error instanceof ApiError && error.status === 410) {
          this.phase = "done";
          this.notify();
          return;
        }
      }
    }
    this.phase = "instructions";
    this.notify();
  }

  /** The start button on the instructions page. */
  async start(): Promise<void> {
    if (this.phase !== "instructions") return;
    try {
      const info = await this.api.openSession();
      this.sessionId = info.session_id;
      this.totalImages = info.total_images;
      this.store.setItem(SESSION_KEY, info.session_id);
      await this.fetchCurrentImage();
      this.phase = "exploring";
      this.lastError = null;
    } catch (error) {
      this.lastError = describe(error);
    }
    this.notify();
  }

  private async fetchCurrentImage(): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    const served = await this.api.currentImage(this.sessionId);
    this.imageId = served.image_id;
    this.canvas = cloneRaster(served.raster);
    this.clicksUsed = served.clicks_used;
    this.captionDraft = "";
  }

  get clicksRemaining(): number {
    return MAX_CLICKS - this.clicksUsed;
  }

  clickEnabled(): boolean {
    return this.phase === "exploring" && this.clicksUsed < MAX_CLICKS;
  }

  submitEnabled(): boolean {
    return this.phase === "exploring" && this.captionDraft.trim().length > 0;
  }

  /** Queue a reveal request; ignored when clicking is disabled. */
  handleClick(x: number, y: number): Promise<void> {
    if (!this.clickEnabled()) return this.clickQueue;
    this.clickQueue = this.clickQueue.then(() => this.sendClick(x, y));
    return this.clickQueue;
  }

  private async sendClick(x: number, y: number): Promise<void> {
    if (!this.sessionId || !this.clickEnabled()) return;
    try {
      const patch = await this.api.click(this.sessionId, x, y);
      if (this.canvas) {
        compositePatch(this.canvas, patch.raster, patch.origin[0], patch.origin[1]);
      }
      this.clicksUsed = MAX_CLICKS - patch.clicks_remaining;
      this.lastError = null;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.clicksUsed = MAX_CLICKS; // budget exhausted server-side
      } else if (error instanceof ApiError && error.status === 422) {
        // out-of-bounds click: nothing revealed, counter unchanged
      } else {
        this.lastError = describe(error);
      }
    }
    this.notify();
  }

  setCaption(text: string): void {
    this.captionDraft = text;
    this.notify();
  }

  async submit(): Promise<void> {
    if (!this.submitEnabled()) return;
    await this.finishImage(() => this.api.submitCaption(this.sessionId!, this.captionDraft));
  }

  async skip(): Promise<void> {
    if (this.phase !== "exploring") return;
    await this.finishImage(() => this.api.skip(this.sessionId!));
  }

  private async finishImage(send: () => Promise<{ next: boolean }>): Promise<void> {
    await this.clickQueue; // let queued reveals land first
    this.phase = "submitting";
    this.notify();
    try {
      const result = await send();
      this.imagesDone += 1;
      if (result.next) {
        await this.fetchCurrentImage();
        this.phase = "exploring";
      } else {
        this.store.removeItem(SESSION_KEY);
        this.phase = "done";
        this.canvas = null;
      }
      this.lastError = null;
    } catch (error) {
      // keep the caption and canvas so the participant can retry
      this.phase = "exploring";
      this.lastError = describe(error);
    }
    this.notify();
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `server error ${error.status}: ${error.message}`;
  return error instanceof Error ? error.message : String(error);
}
