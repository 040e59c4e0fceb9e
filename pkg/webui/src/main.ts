// Boot: ask the service who this certificate is, then hand the page
// over to the tab the user picks. The session panel only ever shows
// what the service asserted.

import { Cas, CasError, Session, getGraph, getSession } from "./api.js";
import {
  App,
  renderCompose,
  renderDecisions,
  renderDocuments,
  renderExchange,
  renderGrants,
  renderSession,
} from "./views.js";

type PageName = "documents" | "compose" | "grants" | "exchange" | "decisions";

const PAGES: PageName[] = ["documents", "compose", "grants", "exchange", "decisions"];

async function boot(): Promise<void> {
  const cas: Cas = { base: "" };
  const sessionPanel = document.getElementById("session")!;
  const nav = document.getElementById("nav")!;
  const main = document.getElementById("page")!;

  let session: Session;
  try {
    session = await getSession(cas);
  } catch (error) {
    const detail = error instanceof CasError ? `${error.status}: ${error.message}` : String(error);
    sessionPanel.textContent = "not signed in";
    main.replaceChildren(
      Object.assign(document.createElement("p"), {
        className: "status error",
        textContent: `The service did not accept a client certificate. ${detail}`,
      })
    );
    return;
  }

  let current: PageName = "documents";
  const app: App = {
    cas,
    session,
    notice: null,
    async refresh() {
      await render(current);
    },
  };

  renderSession(sessionPanel, session);

  async function render(page: PageName): Promise<void> {
    current = page;
    for (const button of nav.querySelectorAll("button")) {
      button.classList.toggle("active", button.dataset.page === page);
    }
    try {
      if (page === "exchange") {
        renderExchange(main, app);
        return;
      }
      if (session.slug === null) {
        main.replaceChildren(
          Object.assign(document.createElement("p"), {
            className: "status error",
            textContent: "This identity has no actor on this service; only package exchange is available.",
          })
        );
        return;
      }
      const graphText = await getGraph(cas, session.slug);
      if (page === "documents") renderDocuments(main, app, graphText);
      else if (page === "compose") renderCompose(main, app, graphText);
      else if (page === "grants") renderGrants(main, app, graphText);
      else renderDecisions(main, app, graphText);
    } catch (error) {
      const detail = error instanceof CasError ? `${error.status}: ${error.message}` : String(error);
      main.replaceChildren(
        Object.assign(document.createElement("p"), { className: "status error", textContent: detail })
      );
    }
  }

  for (const page of PAGES) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = page;
    button.dataset.page = page;
    button.addEventListener("click", () => void render(page));
    nav.append(button);
  }

  await render(current);
}

void boot();
