// The three-step prediction wizard plus bookmarks, about, and help
// screens. All domain values (cities, areas, types, facilities) come from
// the service's metadata endpoint, and every displayed price originates
// from a prediction response; the client never computes one.

import { ApiClient, ApiError, resolveApiBase } from "./api.js";
import { formatRupiah, formatTimestamp } from "./format.js";
import { WizardState } from "./state.js";
import { BookmarkStore } from "./storage.js";
import type { Bookmark, Metadata } from "./types.js";

type ScreenName = "wizard" | "bookmarks" | "about" | "help";

const SHELL = `
  <div id="splash" class="screen">
    <h1>KosPred</h1>
    <p id="splash-status">Loading model metadata…</p>
    <button id="retry-btn" class="hidden">Retry</button>
  </div>
  <div id="chrome" class="hidden">
    <nav>
      <strong>KosPred</strong>
      <button id="nav-predict">Predict</button>
      <button id="nav-bookmarks">Bookmarks</button>
      <button id="nav-about">About</button>
      <button id="nav-help">Help</button>
    </nav>
    <main>
      <section id="screen-wizard" class="screen">
        <ol id="step-indicator">
          <li data-step="1">Location &amp; type</li>
          <li data-step="2">Facilities</li>
          <li data-step="3">Estimate</li>
        </ol>
        <div id="step-1">
          <h2>Step I — where and what</h2>
          <label>City
            <select id="city-select"><option value="">Choose a city</option></select>
          </label>
          <label>Area
            <select id="area-select" disabled><option value="">Choose an area</option></select>
          </label>
          <label>Boarding type
            <select id="type-select"><option value="">Choose a type</option></select>
          </label>
          <button id="to-step-2" disabled>Next</button>
        </div>
        <div id="step-2" class="hidden">
          <h2>Step II — desired facilities</h2>
          <div id="facility-list"></div>
          <div id="predict-error" class="banner hidden"></div>
          <button id="back-to-1">Back</button>
          <button id="predict-btn">Predict price</button>
        </div>
        <div id="step-3" class="hidden">
          <h2>Step III — estimated monthly rent</h2>
          <p id="result-price" class="price"></p>
          <p id="result-detail"></p>
          <div id="result-notice" class="banner hidden"></div>
          <p id="bookmark-saved" class="hidden">Saved to bookmarks.</p>
          <button id="save-bookmark">Save bookmark</button>
          <button id="edit-facilities">Change facilities</button>
          <button id="start-over">Start over</button>
        </div>
      </section>
      <section id="screen-bookmarks" class="screen hidden">
        <h2>Bookmarks</h2>
        <p id="bookmarks-disabled" class="banner hidden">
          Bookmarks are unavailable: this browser blocks local storage.
        </p>
        <p id="bookmarks-empty" class="hidden">Nothing saved yet.</p>
        <ul id="bookmark-list"></ul>
      </section>
      <section id="screen-about" class="screen hidden">
        <h2>About</h2>
        <p>KosPred estimates monthly boarding-house rent from the city,
        area, boarding type, and the facilities you want. Estimates come
        from a neural-network regression model served by the KosPred
        inference service.</p>
        <p id="about-model"></p>
      </section>
      <section id="screen-help" class="screen hidden">
        <h2>Help</h2>
        <ol>
          <li>Pick a city; the area list follows your choice.</li>
          <li>Pick the boarding type and continue.</li>
          <li>Tick the facilities you want, then ask for the estimate.</li>
          <li>Save estimates you like — they stay on this device.</li>
        </ol>
      </section>
    </main>
  </div>
`;

export class App {
  private state: WizardState | null = null;
  private metadata: Metadata | null = null;
  private inFlight: AbortController | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly store: BookmarkStore,
  ) {}

  async start(): Promise<void> {
    this.root.innerHTML = SHELL;
    this.el("retry-btn").addEventListener("click", () => void this.loadMetadata());
    await this.loadMetadata();
  }

  // --- splash / metadata gate ---------------------------------------------

  private async loadMetadata(): Promise<void> {
    const status = this.el("splash-status");
    const retry = this.el("retry-btn");
    retry.classList.add("hidden");
    status.textContent = "Loading model metadata…";
    try {
      this.metadata = await this.api.metadata();
    } catch (err) {
      status.textContent =
        err instanceof ApiError
          ? `Cannot reach the prediction service (${err.message}).`
          : `Cannot reach the prediction service.`;
      retry.classList.remove("hidden");
      return;
    }
    this.state = new WizardState(this.metadata);
    this.el("splash").classList.add("hidden");
    this.el("chrome").classList.remove("hidden");
    this.wireNavigation();
    this.wireWizard();
    this.renderStepOne();
    this.renderAbout();
    this.showScreen("wizard");
  }

  // --- navigation -----------------------------------------------------------

  private wireNavigation(): void {
    const routes: Array<[string, ScreenName]> = [
      ["nav-predict", "wizard"],
      ["nav-bookmarks", "bookmarks"],
      ["nav-about", "about"],
      ["nav-help", "help"],
    ];
    for (const [id, screen] of routes) {
      this.el(id).addEventListener("click", () => this.showScreen(screen));
    }
  }

  private showScreen(name: ScreenName): void {
    for (const screen of ["wizard", "bookmarks", "about", "help"] as const) {
      this.el(`screen-${screen}`).classList.toggle("hidden", screen !== name);
    }
    if (name === "bookmarks") this.renderBookmarks();
  }

  // --- wizard ----------------------------------------------------------------

  private wireWizard(): void {
    const city = this.el<HTMLSelectElement>("city-select");
    const area = this.el<HTMLSelectElement>("area-select");
    const type = this.el<HTMLSelectElement>("type-select");

    city.addEventListener("change", () => {
      if (city.value) this.state!.selectCity(city.value);
      this.renderAreaChoices();
      this.syncStepOne();
    });
    area.addEventListener("change", () => {
      if (area.value) this.state!.selectArea(area.value);
      this.syncStepOne();
    });
    type.addEventListener("change", () => {
      if (type.value) this.state!.selectType(type.value);
      this.syncStepOne();
    });

    this.el("to-step-2").addEventListener("click", () => {
      this.state!.toStepTwo();
      this.syncStepVisibility();
    });
    this.el("back-to-1").addEventListener("click", () => {
      this.state!.backToStepOne();
      this.syncStepVisibility();
    });
    this.el("predict-btn").addEventListener("click", () => void this.submitPrediction());
    this.el("save-bookmark").addEventListener("click", () => this.saveBookmark());
    this.el("edit-facilities").addEventListener("click", () => {
      this.state!.step = 2;
      this.syncStepVisibility();
    });
    this.el("start-over").addEventListener("click", () => {
      this.state!.startOver();
      this.renderStepOne();
      this.syncStepVisibility();
    });
  }

  private renderStepOne(): void {
    const meta = this.metadata!;
    const city = this.el<HTMLSelectElement>("city-select");
    const type = this.el<HTMLSelectElement>("type-select");
    city.innerHTML = '<option value="">Choose a city</option>';
    for (const name of meta.cities) {
      city.append(new Option(name, name));
    }
    type.innerHTML = '<option value="">Choose a type</option>';
    for (const name of meta.types) {
      type.append(new Option(name, name));
    }
    this.renderAreaChoices();
    this.renderFacilities();
    this.syncStepOne();
    this.syncStepVisibility();
  }

  private renderAreaChoices(): void {
    const area = this.el<HTMLSelectElement>("area-select");
    const choices = this.state!.areaChoices();
    area.innerHTML = '<option value="">Choose an area</option>';
    for (const name of choices) {
      area.append(new Option(name, name));
    }
    area.disabled = choices.length === 0;
    area.value = this.state!.area ?? "";
  }

  private renderFacilities(): void {
    const list = this.el("facility-list");
    list.innerHTML = "";
    for (const name of this.metadata!.facilities) {
      const label = document.createElement("label");
      label.className = "facility";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = name;
      box.addEventListener("change", () => this.state!.toggleFacility(name));
      label.append(box, document.createTextNode(` ${name}`));
      list.append(label);
    }
  }

  private syncStepOne(): void {
    (this.el("to-step-2") as HTMLButtonElement).disabled = !this.state!.stepOneComplete;
  }

  private syncStepVisibility(): void {
    const step = this.state!.step;
    this.el("step-1").classList.toggle("hidden", step !== 1);
    this.el("step-2").classList.toggle("hidden", step !== 2);
    this.el("step-3").classList.toggle("hidden", step !== 3);
    for (const item of this.root.querySelectorAll<HTMLElement>("#step-indicator li")) {
      item.classList.toggle("active", Number(item.dataset["step"]) === step);
    }
    if (step !== 3) this.el("bookmark-saved").classList.add("hidden");
  }

  private async submitPrediction(): Promise<void> {
    const error = this.el("predict-error");
    error.classList.add("hidden");
    this.inFlight?.abort(); // at most one request in flight: newest wins
    const controller = new AbortController();
    this.inFlight = controller;
    const s = this.state!.selections();
    try {
      const result = await this.api.predict(
        {
          kota: s.kota!,
          area: s.area!,
          type_kos: s.typeKos!,
          facilities: s.facilities,
        },
        controller.signal,
      );
      this.state!.completePrediction(result);
      this.renderResult();
      this.syncStepVisibility();
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return;
      error.textContent =
        err instanceof ApiError && err.isClientError
          ? `The service rejected the request: ${err.message}`
          : "The prediction request failed. Your selections are kept — try again.";
      error.classList.remove("hidden");
    } finally {
      if (this.inFlight === controller) this.inFlight = null;
    }
  }

  private renderResult(): void {
    const result = this.state!.result!;
    this.el("result-price").textContent = formatRupiah(result.display_price);
    this.el("result-detail").textContent =
      `per month, using ${result.facility_score_used} matched facilities`;
    const notice = this.el("result-notice");
    const notes: string[] = [];
    if (result.unknown_facilities.length > 0) {
      notes.push(`Facilities not known to the model: ${result.unknown_facilities.join(", ")}.`);
    }
    if (result.oov_fields.length > 0) {
      notes.push(
        `New values the model has never seen: ${result.oov_fields.join(", ")}; ` +
          "the estimate is less reliable.",
      );
    }
    notice.textContent = notes.join(" ");
    notice.classList.toggle("hidden", notes.length === 0);
  }

  private renderAbout(): void {
    const model = this.metadata!.model;
    this.el("about-model").textContent =
      `Model ${model.arch}, validation MAE ${formatRupiah(model.validation_mae_idr)}, ` +
      `bundle format v${model.format_version}.`;
  }

  // --- bookmarks ---------------------------------------------------------------

  private saveBookmark(): void {
    const state = this.state!;
    if (!state.result) return;
    const saved = this.store.save({
      selections: state.selections(),
      displayPrice: state.result.display_price,
      createdAt: new Date().toISOString(),
    });
    if (saved) this.el("bookmark-saved").classList.remove("hidden");
  }

  private renderBookmarks(): void {
    this.el("bookmarks-disabled").classList.toggle("hidden", this.store.available);
    const list = this.el("bookmark-list");
    list.innerHTML = "";
    const entries = this.store.list();
    this.el("bookmarks-empty").classList.toggle("hidden", entries.length > 0);
    for (const bookmark of entries) {
      list.append(this.bookmarkItem(bookmark));
    }
  }

  private bookmarkItem(bookmark: Bookmark): HTMLLIElement {
    const item = document.createElement("li");
    item.className = "bookmark";
    const s = bookmark.selections;
    const text = document.createElement("span");
    text.textContent =
      `${formatRupiah(bookmark.displayPrice)} — ${s.typeKos ?? "?"} in ` +
      `${s.area ?? "?"}, ${s.kota ?? "?"} (${s.facilities.length} facilities, ` +
      `${formatTimestamp(bookmark.createdAt)})`;
    const remove = document.createElement("button");
    remove.className = "bookmark-delete";
    remove.textContent = "Delete";
    remove.addEventListener("click", () => {
      this.store.remove(bookmark.createdAt);
      this.renderBookmarks();
    });
    item.append(text, remove);
    return item;
  }

  // --- helpers --------------------------------------------------------------------

  private el<T extends HTMLElement = HTMLElement>(id: string): T {
    const node = this.root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  }
}

export async function initApp(
  root: HTMLElement,
  api: ApiClient,
  store: BookmarkStore,
): Promise<App> {
  const app = new App(root, api, store);
  await app.start();
  return app;
}

// Auto-boot inside a real page; tests construct the app themselves.
if (typeof document !== "undefined") {
  const mount = document.getElementById("kospred-app");
  if (mount) {
    const api = new ApiClient(resolveApiBase(window));
    let storage: Storage | null = null;
    try {
      storage = window.localStorage;
    } catch {
      storage = null;
    }
    void initApp(mount, api, new BookmarkStore(storage));
  }
}
