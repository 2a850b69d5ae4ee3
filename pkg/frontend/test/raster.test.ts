import { describe, expect, it } from "vitest";

import { cloneRaster, compositePatch, makeRaster } from "../src/raster";

function fill(raster: ReturnType<typeof makeRaster>, rgb: [number, number, number]) {
  for (let i = 0; i < raster.pixels.length; i += 4) {
    raster.pixels[i] = rgb[0];
    raster.pixels[i + 1] = rgb[1];
    raster.pixels[i + 2] = rgb[2];
    raster.pixels[i + 3] = 255;
  }
}

describe("compositePatch", () => {
  it("replaces pixels under full alpha and leaves alpha-0 untouched", () => {
    const canvas = makeRaster(4, 4);
    fill(canvas, [10, 10, 10]);
    const patch = makeRaster(2, 2);
    patch.pixels.set([200, 0, 0, 255], 0); // only the first pixel is opaque
    compositePatch(canvas, patch, 1, 1);
    expect([...canvas.pixels.slice((1 * 4 + 1) * 4, (1 * 4 + 1) * 4 + 3)]).toEqual([200, 0, 0]);
    expect([...canvas.pixels.slice((1 * 4 + 2) * 4, (1 * 4 + 2) * 4 + 3)]).toEqual([10, 10, 10]);
  });

  it("blends proportionally at partial alpha", () => {
    const canvas = makeRaster(1, 1);
    fill(canvas, [0, 0, 100]);
    const patch = makeRaster(1, 1);
    patch.pixels.set([100, 0, 0, 128], 0);
    compositePatch(canvas, patch, 0, 0);
    expect(canvas.pixels[0]).toBeCloseTo(50, -1);
    expect(canvas.pixels[2]).toBeCloseTo(50, -1);
  });

  it("is idempotent for binary-alpha patches", () => {
    const canvas = makeRaster(6, 6);
    fill(canvas, [30, 30, 30]);
    const patch = makeRaster(3, 3);
    for (let i = 0; i < 9; i++) {
      const opaque = i % 2 === 0;
      patch.pixels.set([90, 120, 150, opaque ? 255 : 0], i * 4);
    }
    compositePatch(canvas, patch, 2, 2);
    const once = cloneRaster(canvas);
    compositePatch(canvas, patch, 2, 2);
    expect([...canvas.pixels]).toEqual([...once.pixels]);
  });

  it("clips patches that straddle the canvas edge", () => {
    const canvas = makeRaster(3, 3);
    fill(canvas, [1, 1, 1]);
    const patch = makeRaster(3, 3);
    fill(patch, [250, 250, 250]);
    compositePatch(canvas, patch, 2, 2); // only one pixel overlaps
    expect(canvas.pixels[(2 * 3 + 2) * 4]).toBe(250);
    expect(canvas.pixels[0]).toBe(1);
  });
});
