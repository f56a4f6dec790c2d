/**
 * Identity persistence.
 *
 * The identity is granted once, on first load, and then lives in
 * browser-local storage; it is never regenerated on later loads. Clearing
 * that storage (or using a different browser profile) is the only way to
 * get a new one, so a shared browser means a shared identity.
 */

export interface StoredIdentity {
  privateCode: string;
  publicId: string;
  createdAt: string;
}

export type KeyValueStorage = Pick<Storage, "getItem" | "setItem" | "removeItem">;

export const STORAGE_KEY = "ct.identity.v1";

export function createMemoryStorage(): KeyValueStorage {
  const store = new Map<string, string>();
  return {
    getItem: (key: string) => store.get(key) ?? null,
    setItem: (key: string, value: string) => {
      store.set(key, value);
    },
    removeItem: (key: string) => {
      store.delete(key);
    },
  };
}

export function getDefaultStorage(): KeyValueStorage {
  const candidate = (globalThis as { localStorage?: KeyValueStorage }).localStorage;
  if (candidate && typeof candidate.getItem === "function") {
    return candidate;
  }
  return createMemoryStorage();
}

export function loadIdentity(storage: KeyValueStorage): StoredIdentity | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (raw === null) {
    return null;
  }
  try {
    const parsed = JSON.parse(raw) as StoredIdentity;
    if (typeof parsed.privateCode === "string" && typeof parsed.publicId === "string") {
      return parsed;
    }
  } catch {
    // corrupted entry: fall through and grant a fresh identity
  }
  return null;
}

export function saveIdentity(storage: KeyValueStorage, identity: StoredIdentity): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(identity));
}

export function clearIdentity(storage: KeyValueStorage): void {
  storage.removeItem(STORAGE_KEY);
}
