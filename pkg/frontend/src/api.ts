import { ApiError, RevealPatch, Raster, ServedImage, SessionInfo } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
export type PngDecoder = (base64Png: string) => Promise<Raster>;

/**
 * Typed client for the collection service. The transport and the PNG
 * decoder are injectable so tests can run without a browser or network.
 */
export class CollectionApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
    private decode: PngDecoder,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  openSession(): Promise<SessionInfo> {
    return this.request<SessionInfo>("/session", { method: "POST" });
  }

  async currentImage(sessionId: string): Promise<ServedImage> {
    const data = await this.request<{
      image_id: string;
      blurred_png: string;
      width: number;
      height: number;
      clicks_used: number;
    }>(`/session/${sessionId}/image`);
    return {
      image_id: data.image_id,
      width: data.width,
      height: data.height,
      clicks_used: data.clicks_used,
      raster: await this.decode(data.blurred_png),
    };
  }

  async click(sessionId: string, x: number, y: number): Promise<RevealPatch> {
    const data = await this.request<{
      patch_png: string;
      patch_origin: [number, number];
      clicks_remaining: number;
    }>(`/session/${sessionId}/click`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ x, y }),
    });
    return {
      origin: data.patch_origin,
      clicks_remaining: data.clicks_remaining,
      raster: await this.decode(data.patch_png),
    };
  }

  submitCaption(sessionId: string, text: string): Promise<{ next: boolean }> {
    return this.request(`/session/${sessionId}/caption`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  skip(sessionId: string): Promise<{ next: boolean }> {
    return this.request(`/session/${sessionId}/skip`, { method: "POST" });
  }
}
