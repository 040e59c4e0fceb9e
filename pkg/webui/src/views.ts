// DOM for the five pages. Every button press maps onto one service
// call from api.ts; pages whose listing changed re-read the graph, and
// denials land in a status box exactly as the server worded them.
// Nothing here grants, masks, or filters anything on its own.

import {
  Cas,
  CasError,
  Session,
  addGrant,
  composeDossier,
  decide,
  deleteDocument,
  importPackage,
  packageUrl,
  removeGrant,
  uploadDocument,
} from "./api.js";
import {
  DocumentRow,
  decisionsIn,
  documentsIn,
  dossiersIn,
  grantsIn,
  recordIriFor,
  statementChoices,
} from "./model.js";
import { parseTurtle } from "./turtle.js";

export interface App {
  cas: Cas;
  session: Session;
  /** One-shot success message that survives the re-render an action triggers. */
  notice: string | null;
  refresh(): Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) node.setAttribute(name, value);
  node.append(...children);
  return node;
}

function ok(box: HTMLElement, message: string): void {
  box.textContent = message;
  box.className = "status ok";
}

/** Render a failed action; a CasError keeps the server's own words. */
function report(box: HTMLElement, error: unknown): void {
  const text =
    error instanceof CasError
      ? `${error.status}: ${error.message}`
      : error instanceof Error
        ? error.message
        : String(error);
  box.textContent = text;
  box.className = "status error";
}

function noticeBox(app: App): HTMLElement {
  const box = el("p", { class: "status", role: "status" });
  if (app.notice !== null) {
    ok(box, app.notice);
    app.notice = null;
  }
  return box;
}

/** Run one endpoint call. When the page lists what changed, the success
    message travels through app.notice across the refresh; otherwise it
    lands in the page's own status box. Errors never refresh, so the
    user's inputs survive a denial. */
async function act(
  app: App,
  box: HTMLElement,
  action: () => Promise<string>,
  refresh: boolean
): Promise<void> {
  try {
    const message = await action();
    if (refresh) {
      app.notice = message;
      await app.refresh();
    } else {
      ok(box, message);
    }
  } catch (error) {
    report(box, error);
  }
}

export function renderSession(container: HTMLElement, session: Session): void {
  container.replaceChildren(
    el("span", { class: "webid", title: "asserted by the service, not by this page" }, session.webid),
    el("span", { class: "slug" }, session.slug ? `actor: ${session.slug}` : "no local actor"),
    el("span", { class: "kind" }, session.kind ? (session.kind.split("#").pop() ?? "") : "")
  );
}

// -- Documents: list, upload, delete ----------------------------------------------

export function renderDocuments(container: HTMLElement, app: App, graphText: string): void {
  const rows = documentsIn(parseTurtle(graphText));
  const box = noticeBox(app);

  const table = el("table", { class: "documents" });
  table.append(
    el("tr", {}, el("th", {}, "filename"), el("th", {}, "type"), el("th", {}, "bytes"), el("th", {}, "iri"), el("th", {}))
  );
  for (const row of rows) {
    const remove = el("button", { type: "button" }, "delete");
    remove.addEventListener("click", () =>
      act(app, box, async () => {
        await deleteDocument(app.cas, row.id);
        return `deleted ${row.filename}`;
      }, true)
    );
    table.append(
      el(
        "tr",
        {},
        el("td", {}, row.filename),
        el("td", {}, row.mediaType),
        el("td", {}, row.size),
        el("td", { class: "iri" }, row.iri),
        el("td", {}, remove)
      )
    );
  }

  const file = el("input", { type: "file" });
  const upload = el("button", { type: "button" }, "upload");
  upload.addEventListener("click", () => {
    const chosen = file.files?.[0];
    if (!chosen) {
      report(box, new Error("choose a file first"));
      return;
    }
    act(app, box, async () => {
      const stored = await uploadDocument(app.cas, requireSlug(app), chosen, chosen.name);
      return `uploaded ${stored.filename} (${stored.size} bytes)`;
    }, true);
  });

  container.replaceChildren(table, el("div", { class: "form" }, file, upload), box);
}

// -- Compose: the dossier composer -------------------------------------------------

export function renderCompose(container: HTMLElement, app: App, graphText: string): void {
  const triples = parseTurtle(graphText);
  const documents = documentsIn(triples);
  const statements = statementChoices(triples, recordIriFor(graphIriOf(app)));
  const box = noticeBox(app);

  const documentChecks: [HTMLInputElement, DocumentRow][] = [];
  const documentList = el("fieldset", {}, el("legend", {}, "documents to include"));
  for (const row of documents) {
    const check = el("input", { type: "checkbox" });
    documentChecks.push([check, row]);
    documentList.append(
      el("label", { class: "row" }, check, ` ${row.filename} `, el("span", { class: "iri" }, row.iri))
    );
  }

  const statementChecks: [HTMLInputElement, string][] = [];
  const statementList = el("fieldset", {}, el("legend", {}, "record statements to include"));
  for (const choice of statements) {
    const check = el("input", { type: "checkbox" });
    statementChecks.push([check, choice.predicate]);
    statementList.append(
      el(
        "label",
        { class: "row" },
        check,
        ` ${choice.predicate.split(/[#/]/).pop()} = ${choice.values.join(", ")}`
      )
    );
  }

  const target = el("input", {
    type: "text",
    placeholder: "https://university.example/profile/admissions#id",
    size: "60",
  });
  const submit = el("button", { type: "button" }, "compose dossier");
  const grantButton = el("button", { type: "button", disabled: "" }, "grant access to target");
  let composed: string | null = null;

  // The checked set IS the submitted selection, nothing is added behind
  // the user's back; composing and granting stay two separate calls.
  submit.addEventListener("click", () =>
    act(app, box, async () => {
      const chosenDocuments = documentChecks.filter(([c]) => c.checked).map(([, row]) => row.iri);
      const chosenStatements = statementChecks.filter(([c]) => c.checked).map(([, p]) => p);
      const result = await composeDossier(app.cas, requireSlug(app), chosenDocuments, chosenStatements);
      composed = result.dossier;
      grantButton.removeAttribute("disabled");
      return `composed ${result.dossier}`;
    }, false)
  );

  grantButton.addEventListener("click", () => {
    if (composed === null) return;
    const dossier = composed;
    act(app, box, async () => {
      await addGrant(app.cas, requireSlug(app), dossier, target.value.trim());
      return `granted ${dossier} to ${target.value.trim()}`;
    }, false);
  });

  container.replaceChildren(
    documentList,
    statementList,
    el("div", { class: "form" }, el("label", {}, "target university WebID ", target)),
    el("div", { class: "form" }, submit, grantButton),
    box
  );
}

// -- Grants: list, add, revoke --------------------------------------------------------

export function renderGrants(container: HTMLElement, app: App, graphText: string): void {
  const rows = grantsIn(parseTurtle(graphText));
  const box = noticeBox(app);

  const table = el("table", { class: "grants" });
  table.append(el("tr", {}, el("th", {}, "resource"), el("th", {}, "grantee"), el("th", {})));
  for (const row of rows) {
    const revoke = el("button", { type: "button" }, "revoke");
    revoke.addEventListener("click", () =>
      act(app, box, async () => {
        await removeGrant(app.cas, requireSlug(app), row.resource, row.grantee);
        return `revoked ${row.grantee} on ${row.resource}`;
      }, true)
    );
    table.append(
      el(
        "tr",
        {},
        el("td", { class: "iri" }, row.resource),
        el("td", { class: "iri" }, row.grantee),
        el("td", {}, revoke)
      )
    );
  }

  const resource = el("input", { type: "text", placeholder: "resource IRI", size: "50" });
  const grantee = el("input", { type: "text", placeholder: "grantee WebID", size: "50" });
  const add = el("button", { type: "button" }, "grant");
  add.addEventListener("click", () =>
    act(app, box, async () => {
      await addGrant(app.cas, requireSlug(app), resource.value.trim(), grantee.value.trim());
      return `granted ${resource.value.trim()} to ${grantee.value.trim()}`;
    }, true)
  );

  container.replaceChildren(table, el("div", { class: "form" }, resource, grantee, add), box);
}

// -- Exchange: download from a remote service, import a downloaded package ------------

export function renderExchange(container: HTMLElement, app: App): void {
  const box = noticeBox(app);

  const remoteBase = el("input", { type: "text", placeholder: "https://remote.example", size: "40" });
  const dossierId = el("input", { type: "text", placeholder: "dossier or decision id", size: "40" });
  const link = el("a", { class: "download", target: "_blank" }, "download package");
  // A navigational download, never a scripted cross-origin fetch: the
  // browser carries the client certificate to the other origin and hands
  // the user a file (or the service's denial page).
  const buildLink = () => {
    const base = remoteBase.value.trim().replace(/\/$/, "");
    link.setAttribute("href", packageUrl({ base }, dossierId.value.trim()));
  };
  remoteBase.addEventListener("input", buildLink);
  dossierId.addEventListener("input", buildLink);

  const file = el("input", { type: "file", accept: ".zip,application/zip" });
  const doImport = el("button", { type: "button" }, "import package");
  doImport.addEventListener("click", () => {
    const chosen = file.files?.[0];
    if (!chosen) {
      report(box, new Error("choose a downloaded package first"));
      return;
    }
    act(app, box, async () => {
      const outcome = await importPackage(app.cas, requireSlug(app), chosen);
      const warned = outcome.warnings.length ? `; ${outcome.warnings.join("; ")}` : "";
      return `imported ${outcome.documentsAdded} documents, ${outcome.triplesAdded} statements${warned}`;
    }, false);
  });

  container.replaceChildren(
    el("fieldset", {}, el("legend", {}, "download from a remote service"), remoteBase, dossierId, link),
    el("fieldset", {}, el("legend", {}, "import a downloaded package"), file, doImport),
    box
  );
}

// -- Decisions: record one (university side); list what the graph holds ----------------

export function renderDecisions(container: HTMLElement, app: App, graphText: string): void {
  const triples = parseTurtle(graphText);
  const box = noticeBox(app);
  const sections: HTMLElement[] = [];

  const applications = dossiersIn(triples).filter((d) => d.importedFrom !== null);
  if (applications.length > 0) {
    const picker = el("select", {});
    for (const application of applications) {
      picker.append(el("option", { value: application.iri }, `${application.kind} ${application.iri}`));
    }
    const outcome = el("select", {});
    outcome.append(el("option", { value: "accepted" }, "accepted"), el("option", { value: "rejected" }, "rejected"));
    const comment = el("input", { type: "text", placeholder: "comment", size: "50" });
    const submit = el("button", { type: "button" }, "record decision");
    submit.addEventListener("click", () =>
      act(app, box, async () => {
        const verdict = outcome.value === "rejected" ? "rejected" : "accepted";
        const result = await decide(app.cas, requireSlug(app), picker.value, verdict, comment.value);
        return `recorded ${result.outcome}: ${result.decision}`;
      }, true)
    );
    sections.push(
      el("fieldset", {}, el("legend", {}, "record a decision on an imported application"), picker, outcome, comment, submit)
    );
  }

  const table = el("table", { class: "decisions" });
  table.append(el("tr", {}, el("th", {}, "outcome"), el("th", {}, "comment"), el("th", {}, "answers")));
  for (const row of decisionsIn(triples)) {
    table.append(
      el("tr", {}, el("td", {}, row.outcome), el("td", {}, row.comment), el("td", { class: "iri" }, row.applicationRef))
    );
  }
  sections.push(el("fieldset", {}, el("legend", {}, "decisions in this graph"), table));

  container.replaceChildren(...sections, box);
}

function requireSlug(app: App): string {
  if (app.session.slug === null) throw new Error("this identity has no actor on this service");
  return app.session.slug;
}

function graphIriOf(app: App): string {
  return `${window.location.origin}/graphs/${app.session.slug}`;
}
