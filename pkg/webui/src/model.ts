// Shapes the actor's graph into what the pages render. Everything here
// is read-only projection; the service stays the only place that decides
// anything.

import { RDF_TYPE, Term, Triple, iri, termEquals } from "./turtle.js";

const S = "http://persemid.bfh.ch/vocab/student#";
const CAS = "http://persemid.bfh.ch/vocab/cas#";

export const PERMISSION = iri(`${S}permission`);
export const DOCUMENT_TYPE = iri(`${CAS}Document`);
export const PACKAGE_KIND = iri(`${CAS}packageKind`);
export const APPLICATION_DOSSIER = iri(`${CAS}ApplicationDossier`);
export const BACHELOR_DOSSIER = iri(`${CAS}BachelorDossier`);
export const DECISION_KIND = iri(`${CAS}Decision`);

export interface DocumentRow {
  iri: string;
  id: string;
  filename: string;
  mediaType: string;
  size: string;
  sha256: string;
}

export interface GrantRow {
  resource: string;
  grantee: string;
}

export interface DossierRow {
  iri: string;
  id: string;
  kind: string;
  documents: string[];
  importedFrom: string | null;
}

export interface DecisionRow {
  iri: string;
  outcome: string;
  comment: string;
  applicationRef: string;
  importedFrom: string | null;
}

export interface StatementRow {
  predicate: string;
  values: string[];
}

function objectsOf(triples: Triple[], subject: Term, predicate: Term): Term[] {
  return triples
    .filter((t) => termEquals(t.subject, subject) && termEquals(t.predicate, predicate))
    .map((t) => t.object);
}

function text(triples: Triple[], subject: Term, predicate: string, fallback = ""): string {
  const found = objectsOf(triples, subject, iri(predicate))[0];
  if (found === undefined || found.kind === "blank") return fallback;
  return found.value;
}

function subjectsWith(triples: Triple[], predicate: Term, object: Term): Term[] {
  const out: Term[] = [];
  for (const t of triples) {
    if (termEquals(t.predicate, predicate) && termEquals(t.object, object)) {
      if (!out.some((s) => termEquals(s, t.subject))) out.push(t.subject);
    }
  }
  return out;
}

function tail(value: string): string {
  return value.split("/").pop() ?? value;
}

export function documentsIn(triples: Triple[]): DocumentRow[] {
  return subjectsWith(triples, iri(RDF_TYPE), DOCUMENT_TYPE)
    .filter((s): s is Term & { kind: "iri" } => s.kind === "iri")
    .map((subject) => ({
      iri: subject.value,
      id: tail(subject.value),
      filename: text(triples, subject, `${CAS}filename`, tail(subject.value)),
      mediaType: text(triples, subject, `${CAS}mediaType`, "application/octet-stream"),
      size: text(triples, subject, `${CAS}size`, "?"),
      sha256: text(triples, subject, `${CAS}sha256`),
    }))
    .sort((a, b) => a.filename.localeCompare(b.filename) || a.iri.localeCompare(b.iri));
}

export function grantsIn(triples: Triple[]): GrantRow[] {
  const rows: GrantRow[] = [];
  for (const t of triples) {
    if (termEquals(t.predicate, PERMISSION) && t.subject.kind === "iri" && t.object.kind === "iri") {
      rows.push({ resource: t.subject.value, grantee: t.object.value });
    }
  }
  return rows.sort((a, b) => a.resource.localeCompare(b.resource) || a.grantee.localeCompare(b.grantee));
}

export function dossiersIn(triples: Triple[]): DossierRow[] {
  const rows: DossierRow[] = [];
  for (const kind of [APPLICATION_DOSSIER, BACHELOR_DOSSIER]) {
    for (const subject of subjectsWith(triples, PACKAGE_KIND, kind)) {
      if (subject.kind !== "iri") continue;
      const documents = objectsOf(triples, subject, iri(`${CAS}includesDocument`))
        .filter((o) => o.kind === "iri")
        .map((o) => o.value)
        .sort();
      const source = objectsOf(triples, subject, iri(`${CAS}importedFrom`))[0];
      rows.push({
        iri: subject.value,
        id: tail(subject.value),
        kind: kind.value.split("#").pop() ?? kind.value,
        documents,
        importedFrom: source?.kind === "iri" ? source.value : null,
      });
    }
  }
  return rows.sort((a, b) => a.iri.localeCompare(b.iri));
}

export function decisionsIn(triples: Triple[]): DecisionRow[] {
  return subjectsWith(triples, PACKAGE_KIND, DECISION_KIND)
    .filter((s): s is Term & { kind: "iri" } => s.kind === "iri")
    .map((subject) => {
      const outcome = objectsOf(triples, subject, iri(`${CAS}outcome`))[0];
      const source = objectsOf(triples, subject, iri(`${CAS}importedFrom`))[0];
      return {
        iri: subject.value,
        outcome: outcome?.kind === "iri" ? outcome.value.split("#").pop() ?? "?" : "?",
        comment: text(triples, subject, `${CAS}comment`),
        applicationRef: text(triples, subject, `${CAS}applicationRef`),
        importedFrom: source?.kind === "iri" ? source.value : null,
      };
    })
    .sort((a, b) => a.iri.localeCompare(b.iri));
}

/** The statements on the actor's own record node that a composed dossier
    can carry along; the webid link stays out, it is identity, not a
    disclosure choice. */
export function statementChoices(triples: Triple[], recordIri: string): StatementRow[] {
  const record = iri(recordIri);
  const byPredicate = new Map<string, string[]>();
  for (const t of triples) {
    if (!termEquals(t.subject, record) || t.predicate.kind !== "iri") continue;
    if (t.predicate.value === RDF_TYPE || t.predicate.value === `${S}webid`) continue;
    if (t.object.kind !== "literal") continue;
    const values = byPredicate.get(t.predicate.value) ?? [];
    values.push(t.object.value);
    byPredicate.set(t.predicate.value, values);
  }
  return [...byPredicate.entries()]
    .map(([predicate, values]) => ({ predicate, values: values.sort() }))
    .sort((a, b) => a.predicate.localeCompare(b.predicate));
}

/** The record node of an actor graph: the '#' fragment of the graph IRI. */
export function recordIriFor(graphIri: string): string {
  return `${graphIri}#`;
}
