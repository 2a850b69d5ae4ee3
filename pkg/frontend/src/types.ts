export type Phase = "instructions" | "exploring" | "submitting" | "done";

export const MAX_CLICKS = 10;

/** Decoded raster, straight RGBA bytes row-major. */
export interface Raster {
  width: number;
  height: number;
  pixels: Uint8ClampedArray; // length = width * height * 4
}

export interface SessionInfo {
  session_id: string;
  total_images: number;
}

export interface ServedImage {
  image_id: string;
  width: number;
  height: number;
  clicks_used: number;
  raster: Raster;
}

export interface RevealPatch {
  origin: [number, number];
  raster: Raster;
  clicks_remaining: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}
