// One function per content-access-service endpoint. The UI performs no
// request the service could not verify on its own: identity rides on the
// connection (the browser's client certificate), never in page state.

export interface Cas {
  /** Origin of the service, "" for same-origin relative requests. */
  base: string;
  /** Extra headers for non-browser drivers (tests pass the loopback
      certificate header here); a browser leaves this unset. */
  headers?: Record<string, string>;
}

export class CasError extends Error {
  constructor(readonly status: number, body: string) {
    super(body.trim() || `HTTP ${status}`);
  }
}

export interface Session {
  webid: string;
  slug: string | null;
  kind: string | null;
}

export interface DocumentUpload {
  iri: string;
  id: string;
  filename: string;
  mediaType: string;
  sha256: string;
  size: number;
}

export interface ImportReport {
  triplesAdded: number;
  documentsAdded: number;
  packageKind: string;
  warnings: string[];
}

async function request(cas: Cas, path: string, init: RequestInit = {}): Promise<Response> {
  const headers = { ...(cas.headers ?? {}), ...(init.headers as Record<string, string> | undefined) };
  const r = await fetch(`${cas.base}${path}`, { ...init, headers });
  if (!r.ok) throw new CasError(r.status, await r.text());
  return r;
}

export async function getSession(cas: Cas): Promise<Session> {
  const r = await request(cas, "/session");
  return r.json();
}

export async function getGraph(cas: Cas, slug: string): Promise<string> {
  const r = await request(cas, `/graphs/${slug}`);
  return r.text();
}

export async function getProfile(cas: Cas, slug: string): Promise<string> {
  const r = await request(cas, `/profile/${slug}`);
  return r.text();
}

export async function uploadDocument(
  cas: Cas,
  slug: string,
  data: Blob,
  filename: string
): Promise<DocumentUpload> {
  const form = new FormData();
  form.append("file", data, filename);
  const r = await request(cas, `/actors/${slug}/documents`, { method: "POST", body: form });
  return r.json();
}

export async function deleteDocument(cas: Cas, documentId: string): Promise<void> {
  await request(cas, `/documents/${documentId}`, { method: "DELETE" });
}

export async function composeDossier(
  cas: Cas,
  slug: string,
  documents: string[],
  statements: string[]
): Promise<{ dossier: string }> {
  const r = await request(cas, `/actors/${slug}/compose`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ documents, statements }),
  });
  return r.json();
}

function permissionStatement(resource: string, grantee: string): string {
  return `<${resource}> <http://persemid.bfh.ch/vocab/student#permission> <${grantee}> .\n`;
}

export async function addGrant(cas: Cas, slug: string, resource: string, grantee: string): Promise<void> {
  await request(cas, `/actors/${slug}/grants`, {
    method: "POST",
    headers: { "Content-Type": "text/turtle; charset=utf-8" },
    body: permissionStatement(resource, grantee),
  });
}

export async function removeGrant(cas: Cas, slug: string, resource: string, grantee: string): Promise<void> {
  await request(cas, `/actors/${slug}/grants`, {
    method: "DELETE",
    headers: { "Content-Type": "text/turtle; charset=utf-8" },
    body: permissionStatement(resource, grantee),
  });
}

export async function importPackage(
  cas: Cas,
  slug: string,
  data: Blob | ArrayBuffer
): Promise<ImportReport> {
  const r = await request(cas, `/actors/${slug}/import`, {
    method: "POST",
    headers: { "Content-Type": "application/zip" },
    body: data,
  });
  return r.json();
}

export async function decide(
  cas: Cas,
  slug: string,
  application: string,
  outcome: "accepted" | "rejected",
  comment: string
): Promise<{ decision: string; outcome: string }> {
  const r = await request(cas, `/actors/${slug}/decide`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ application, outcome, comment }),
  });
  return r.json();
}

/** Where a package download lives. In the browser this URL is only ever
    followed navigationally (an anchor the user clicks), which is also the
    one sanctioned cross-origin path: the browser carries the certificate
    and hands the user a file (or the remote service's denial). */
export function packageUrl(cas: Cas, dossierId: string): string {
  return `${cas.base}/package/${dossierId}`;
}
