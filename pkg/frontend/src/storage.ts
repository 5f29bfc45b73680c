// Bookmark persistence over window.localStorage (or any Storage-shaped
// object, which keeps it testable). Saving never deduplicates: two saves
// of the same selections are two entries.

import type { Bookmark } from "./types.js";

const KEY = "kospred.bookmarks.v1";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class BookmarkStore {
  readonly available: boolean;

  constructor(private readonly storage: StorageLike | null) {
    this.available = this.probe();
  }

  private probe(): boolean {
    if (!this.storage) return false;
    try {
      const probeKey = `${KEY}.probe`;
      this.storage.setItem(probeKey, "1");
      this.storage.removeItem(probeKey);
      return true;
    } catch {
      return false;
    }
  }

  /** Newest first. */
  list(): Bookmark[] {
    if (!this.available) return [];
    try {
      const raw = this.storage!.getItem(KEY);
      if (!raw) return [];
      const parsed = JSON.parse(raw) as Bookmark[];
      if (!Array.isArray(parsed)) return [];
      return [...parsed].sort((a, b) => b.createdAt.localeCompare(a.createdAt));
    } catch {
      return [];
    }
  }

  save(bookmark: Bookmark): boolean {
    if (!this.available) return false;
    try {
      const raw = this.storage!.getItem(KEY);
      const entries = raw ? (JSON.parse(raw) as Bookmark[]) : [];
      entries.push(bookmark);
      this.storage!.setItem(KEY, JSON.stringify(entries));
      return true;
    } catch {
      return false;
    }
  }

  remove(createdAt: string): boolean {
    if (!this.available) return false;
    try {
      const entries = this.list();
      const index = entries.findIndex((b) => b.createdAt === createdAt);
      if (index === -1) return false;
      entries.splice(index, 1);
      this.storage!.setItem(KEY, JSON.stringify(entries));
      return true;
    } catch {
      return false;
    }
  }
}
