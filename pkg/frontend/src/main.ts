import { CollectionApi } from "./api";
import { decodePngInBrowser, mountApp } from "./dom";

declare global {
  interface Window {
    NEVALAB_API_BASE?: string;
  }
}

const base = window.NEVALAB_API_BASE ?? "";
const api = new CollectionApi(base, (url, init) => fetch(url, init), decodePngInBrowser);
mountApp(document, api, window.sessionStorage);
