// Reader for the Turtle the service emits on its graph and profile
// endpoints: @prefix headers, subject blocks chained with ';' and ',',
// IRIs, prefixed names, blank nodes, and plain/typed/tagged literals.
// Collections and inline blank-node brackets are out of scope here, the
// server never produces them.

export interface IriTerm {
  kind: "iri";
  value: string;
}

export type Term =
  | IriTerm
  | { kind: "blank"; label: string }
  | { kind: "literal"; value: string; datatype: string; language: string | null };

export interface Triple {
  subject: Term;
  predicate: Term;
  object: Term;
}

export const RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const XSD_STRING = "http://www.w3.org/2001/XMLSchema#string";
const XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer";

export function iri(value: string): IriTerm {
  return { kind: "iri", value };
}

export function literal(value: string, datatype = XSD_STRING, language: string | null = null): Term {
  return { kind: "literal", value, datatype, language };
}

export function termEquals(a: Term, b: Term): boolean {
  if (a.kind !== b.kind) return false;
  if (a.kind === "iri" && b.kind === "iri") return a.value === b.value;
  if (a.kind === "blank" && b.kind === "blank") return a.label === b.label;
  if (a.kind === "literal" && b.kind === "literal")
    return a.value === b.value && a.datatype === b.datatype && a.language === b.language;
  return false;
}

export class TurtleError extends Error {
  constructor(message: string, readonly line: number) {
    super(`line ${line}: ${message}`);
  }
}

class Scanner {
  pos = 0;
  line = 1;

  constructor(readonly text: string) {}

  fail(message: string): never {
    throw new TurtleError(message, this.line);
  }

  atEnd(): boolean {
    this.skipSpace();
    return this.pos >= this.text.length;
  }

  skipSpace(): void {
    while (this.pos < this.text.length) {
      const ch = this.text[this.pos];
      if (ch === "\n") {
        this.line += 1;
        this.pos += 1;
      } else if (ch === " " || ch === "\t" || ch === "\r") {
        this.pos += 1;
      } else if (ch === "#") {
        while (this.pos < this.text.length && this.text[this.pos] !== "\n") this.pos += 1;
      } else {
        return;
      }
    }
  }

  peek(): string {
    return this.text[this.pos] ?? "";
  }

  take(expected: string): void {
    if (!this.text.startsWith(expected, this.pos)) {
      this.fail(`expected '${expected}'`);
    }
    this.pos += expected.length;
  }

  takeIri(): string {
    this.take("<");
    const end = this.text.indexOf(">", this.pos);
    if (end < 0) this.fail("unterminated IRI");
    const raw = this.text.slice(this.pos, end);
    if (/[\s<"{}|^`]/.test(raw)) this.fail(`forbidden character in IRI <${raw}>`);
    this.pos = end + 1;
    return raw;
  }

  takeString(): string {
    this.take('"');
    let out = "";
    while (true) {
      const ch = this.text[this.pos];
      if (ch === undefined || ch === "\n") this.fail("unterminated string");
      this.pos += 1;
      if (ch === '"') return out;
      if (ch !== "\\") {
        out += ch;
        continue;
      }
      const kind = this.text[this.pos];
      this.pos += 1;
      if (kind === "t") out += "\t";
      else if (kind === "n") out += "\n";
      else if (kind === "r") out += "\r";
      else if (kind === "b") out += "\b";
      else if (kind === "f") out += "\f";
      else if (kind === '"' || kind === "\\" || kind === "'") out += kind;
      else if (kind === "u" || kind === "U") {
        const width = kind === "u" ? 4 : 8;
        const hex = this.text.slice(this.pos, this.pos + width);
        if (!new RegExp(`^[0-9A-Fa-f]{${width}}$`).test(hex)) this.fail("malformed unicode escape");
        out += String.fromCodePoint(parseInt(hex, 16));
        this.pos += width;
      } else {
        this.fail(`invalid string escape '\\${kind}'`);
      }
    }
  }

  takeWord(): string {
    const match = /^[^\s;,."'<>()[\]#]+/.exec(this.text.slice(this.pos));
    if (!match) this.fail(`unexpected character '${this.peek()}'`);
    this.pos += match[0].length;
    return match[0];
  }
}

export function parseTurtle(text: string): Triple[] {
  const scanner = new Scanner(text);
  const prefixes = new Map<string, string>();
  const triples: Triple[] = [];

  const expand = (word: string): Term => {
    const colon = word.indexOf(":");
    if (colon < 0) scanner.fail(`expected an IRI, prefixed name, or literal; got '${word}'`);
    const prefix = word.slice(0, colon);
    if (prefix === "_") return { kind: "blank", label: word.slice(colon + 1) };
    const namespace = prefixes.get(prefix);
    if (namespace === undefined) scanner.fail(`undeclared prefix '${prefix}:'`);
    return iri(namespace + word.slice(colon + 1));
  };

  const readTerm = (): Term => {
    scanner.skipSpace();
    const ch = scanner.peek();
    if (ch === "<") return iri(scanner.takeIri());
    if (ch === '"') {
      const value = scanner.takeString();
      if (scanner.peek() === "@") {
        scanner.take("@");
        const tag = scanner.takeWord();
        return literal(value, XSD_STRING, tag);
      }
      if (scanner.text.startsWith("^^", scanner.pos)) {
        scanner.take("^^");
        const dt = scanner.peek() === "<" ? iri(scanner.takeIri()) : expand(scanner.takeWord());
        if (dt.kind !== "iri") throw new TurtleError("datatype must be an IRI", scanner.line);
        return literal(value, dt.value);
      }
      return literal(value);
    }
    if (/^[+-]?[0-9]/.test(scanner.text.slice(scanner.pos, scanner.pos + 2))) {
      const word = scanner.takeWord();
      if (!/^[+-]?[0-9]+$/.test(word)) scanner.fail(`malformed number '${word}'`);
      if (/^\.[0-9]/.test(scanner.text.slice(scanner.pos, scanner.pos + 2)))
        scanner.fail("decimal literals are not supported");
      return literal(word, XSD_INTEGER);
    }
    const word = scanner.takeWord();
    if (word === "true" || word === "false") scanner.fail("boolean literals are not supported");
    return expand(word);
  };

  while (!scanner.atEnd()) {
    if (scanner.peek() === "@") {
      scanner.take("@");
      const directive = scanner.takeWord();
      if (directive === "prefix") {
        scanner.skipSpace();
        const name = scanner.takeWord();
        if (!name.endsWith(":")) scanner.fail("prefix name must end with ':'");
        scanner.skipSpace();
        const namespace = scanner.takeIri();
        prefixes.set(name.slice(0, -1), namespace);
        scanner.skipSpace();
        scanner.take(".");
        continue;
      }
      if (directive === "base") {
        scanner.fail("@base is not supported; the service emits absolute IRIs");
      }
      scanner.fail(`unknown directive '@${directive}'`);
    }

    const subject = readTerm();
    if (subject.kind === "literal") scanner.fail("a literal cannot be a subject");
    while (true) {
      scanner.skipSpace();
      const predicate = scanner.peek() === "<" ? iri(scanner.takeIri()) : readVerb();
      while (true) {
        const object = readTerm();
        triples.push({ subject, predicate, object });
        scanner.skipSpace();
        if (scanner.peek() === ",") {
          scanner.take(",");
          continue;
        }
        break;
      }
      if (scanner.peek() === ";") {
        scanner.take(";");
        scanner.skipSpace();
        if (scanner.peek() === ".") break; // tolerate a trailing ';'
        continue;
      }
      break;
    }
    scanner.skipSpace();
    scanner.take(".");
  }

  function readVerb(): Term {
    const word = scanner.takeWord();
    if (word === "a") return iri(RDF_TYPE);
    const term = expand(word);
    if (term.kind !== "iri") throw new TurtleError("predicate must be an IRI", scanner.line);
    return term;
  }

  return triples;
}
