import { beforeEach, describe, expect, it } from "vitest";

import { CollectionApi } from "../src/api";
import { SessionController, KeyValueStore } from "../src/state";
import { FakeCollectionServer, fakeDecoder, syntheticImage } from "./fake_server";

class MemoryStore implements KeyValueStore {
  private map = new Map<string, string>();
  getItem(key: string) {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string) {
    this.map.set(key, value);
  }
  removeItem(key: string) {
    this.map.delete(key);
  }
}

function harness(nImages = 2) {
  const server = new FakeCollectionServer(
    Array.from({ length: nImages }, (_, i) => syntheticImage(`img${i}`)),
  );
  const api = new CollectionApi("", server.fetchFn, fakeDecoder);
  const store = new MemoryStore();
  const controller = new SessionController(api, store, () => {});
  return { server, api, store, controller };
}

describe("SessionController", () => {
  let h: ReturnType<typeof harness>;

  beforeEach(() => {
    h = harness();
  });

  it("starts in the instructions phase and moves to exploring", async () => {
    await h.controller.load();
    expect(h.controller.phase).toBe("instructions");
    await h.controller.start();
    expect(h.controller.phase).toBe("exploring");
    expect(h.controller.imageId).toBe("img0");
    expect(h.controller.clicksUsed).toBe(0);
    expect(h.controller.canvas).not.toBeNull();
  });

  it("counts clicks from server responses and disables at ten", async () => {
    await h.controller.load();
    await h.controller.start();
    for (let i = 0; i < 10; i++) {
      expect(h.controller.clickEnabled()).toBe(true);
      await h.controller.handleClick(10 + i, 12);
      expect(h.controller.clicksUsed).toBe(i + 1);
    }
    expect(h.controller.clickEnabled()).toBe(false);
    await h.controller.handleClick(5, 5); // ignored client-side
    expect(h.controller.clicksUsed).toBe(10);
    expect(h.server.clickOrder.length).toBe(10);
  });

  it("queues concurrent clicks and preserves order", async () => {
    await h.controller.load();
    await h.controller.start();
    const clicks = [
      [3, 4], [30, 8], [17, 22], [40, 30], [9, 9],
    ] as const;
    await Promise.all(clicks.map(([x, y]) => h.controller.handleClick(x, y)));
    expect(h.server.clickOrder).toEqual(clicks.map(([x, y]) => ({ x, y })));
  });

  it("composites reveals: click center becomes clean, far stays blurred", async () => {
    await h.controller.load();
    await h.controller.start();
    const image = h.server.images[0];
    await h.controller.handleClick(20, 20);
    const canvas = h.controller.canvas!;
    const at = (x: number, y: number) =>
      [...canvas.pixels.slice((y * canvas.width + x) * 4, (y * canvas.width + x) * 4 + 3)];
    const cleanAt = (x: number, y: number) =>
      [...image.clean.pixels.slice((y * image.clean.width + x) * 4, (y * image.clean.width + x) * 4 + 3)];
    expect(at(20, 20)).toEqual(cleanAt(20, 20));
    expect(at(45, 5)).toEqual([128, 128, 128]); // beyond the reveal radius
  });

  it("gates submit on a non-empty caption", async () => {
    await h.controller.load();
    await h.controller.start();
    expect(h.controller.submitEnabled()).toBe(false);
    await h.controller.submit(); // no-op
    expect(h.server.observations).toHaveLength(0);
    h.controller.setCaption("   ");
    expect(h.controller.submitEnabled()).toBe(false);
    h.controller.setCaption("two shapes");
    expect(h.controller.submitEnabled()).toBe(true);
  });

  it("advances to the next image after submit and resets state", async () => {
    await h.controller.load();
    await h.controller.start();
    await h.controller.handleClick(10, 10);
    h.controller.setCaption("first image");
    await h.controller.submit();
    expect(h.controller.phase).toBe("exploring");
    expect(h.controller.imageId).toBe("img1");
    expect(h.controller.clicksUsed).toBe(0);
    expect(h.controller.captionDraft).toBe("");
    expect(h.server.observations).toHaveLength(1);
    expect(h.server.observations[0]).toMatchObject({
      image_id: "img0", caption: "first image", skipped: false,
    });
    expect(h.server.observations[0].clicks).toHaveLength(1);
  });

  it("records a skipped observation on skip", async () => {
    await h.controller.load();
    await h.controller.start();
    await h.controller.skip();
    expect(h.server.observations[0]).toMatchObject({
      image_id: "img0", skipped: true, caption: "",
    });
    expect(h.controller.imageId).toBe("img1");
  });

  it("reaches done after the last image and clears the stored session", async () => {
    await h.controller.load();
    await h.controller.start();
    h.controller.setCaption("one");
    await h.controller.submit();
    h.controller.setCaption("two");
    await h.controller.submit();
    expect(h.controller.phase).toBe("done");
    expect(h.store.getItem("nevalab.session")).toBeNull();
  });

  it("resumes mid-session from the stored session id", async () => {
    await h.controller.load();
    await h.controller.start();
    await h.controller.handleClick(8, 8);
    await h.controller.handleClick(9, 9);
    const resumed = new SessionController(
      new CollectionApi("", h.server.fetchFn, fakeDecoder), h.store, () => {},
    );
    await resumed.load();
    expect(resumed.phase).toBe("exploring");
    expect(resumed.imageId).toBe("img0");
    expect(resumed.clicksUsed).toBe(2); // server-reported count survives refresh
  });

  it("forces the counter to ten on a 409 click", async () => {
    await h.controller.load();
    await h.controller.start();
    h.server.alwaysConflictOnClick = true;
    await h.controller.handleClick(4, 4);
    expect(h.controller.clicksUsed).toBe(10);
    expect(h.controller.clickEnabled()).toBe(false);
  });

  it("keeps state and reports an error when a submit fails, then retries", async () => {
    await h.controller.load();
    await h.controller.start();
    h.controller.setCaption("fragile network");
    h.server.failNextSubmit = true;
    await h.controller.submit();
    expect(h.controller.phase).toBe("exploring");
    expect(h.controller.captionDraft).toBe("fragile network");
    expect(h.controller.lastError).toMatch(/500/);
    await h.controller.submit(); // retry succeeds
    expect(h.server.observations).toHaveLength(1);
    expect(h.controller.lastError).toBeNull();
  });

  it("never downloads the clean image: transcript and canvas stay masked", async () => {
    await h.controller.load();
    await h.controller.start();
    const image = h.server.images[0];
    const clicks = [[12, 12], [36, 28]] as const;
    for (const [x, y] of clicks) await h.controller.handleClick(x, y);
    h.controller.setCaption("masked");
    await h.controller.submit();

    const allowed = /^\/session(\/[^/]+\/(image|click|caption|skip))?$/;
    for (const entry of h.server.transcript) {
      expect(entry.path).toMatch(allowed);
    }
    const cleanBytes = JSON.stringify(Array.from(image.clean.pixels));
    for (const entry of h.server.transcript) {
      expect(entry.body.includes(cleanBytes)).toBe(false);
    }
  });
});
