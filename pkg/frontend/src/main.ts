/** Browser entry point: wires the stores and renderers to the DOM. */

import { ApiClient, httpTransport } from "./api.js";
import { loadDashboard } from "./dashboard.js";
import { QueueStore } from "./queue.js";
import { renderDashboard, renderQueue } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8400";
const token = params.get("token") ?? undefined;
const moderatorId = params.get("moderator") ?? "console";

const client = new ApiClient(httpTransport(baseUrl, token));
const queue = new QueueStore(client, moderatorId);

const queueEl = document.getElementById("queue")!;
const dashboardEl = document.getElementById("dashboard")!;

function paintQueue(): void {
  queueEl.innerHTML = renderQueue(queue.state);
}

async function refreshQueue(): Promise<void> {
  await queue.refresh();
  paintQueue();
}

async function refreshDashboard(): Promise<void> {
  try {
    dashboardEl.innerHTML = renderDashboard(await loadDashboard(client));
  } catch {
    // dashboard is read-only decoration; the queue banner covers outages
  }
}

queueEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.matches("button.verdict")) {
    const flagId = target.dataset["flag"]!;
    const label = target.dataset["label"]!;
    paintQueue(); // show the optimistic marker immediately
    void queue.submitVerdict(flagId, label).then(paintQueue);
  }
});

void refreshQueue();
void refreshDashboard();
setInterval(() => {
  void queue.flushUnsent().then(paintQueue);
  void refreshQueue();
}, 5000);
setInterval(() => void refreshDashboard(), 15000);
