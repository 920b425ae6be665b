/** DOM rendering. The whole console re-renders from state on every change;
 * interactive elements carry data-action attributes that main.ts delegates. */

import { MetricsReport, ModelInfo, QuarantineDetail, QuarantineSummary } from "./api.js";
import { Store } from "./store.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: number | null | undefined, digits = 4): string {
  if (v === null || v === undefined) return "n/a";
  return v.toFixed(digits);
}

function fmtRaw(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e15) return String(v);
  return v.toPrecision(6);
}

function probBars(probs: number[], model: ModelInfo | null): string {
  const threshold = model?.threshold ?? 0.8;
  const names = model?.classes ?? probs.map((_, i) => `class ${i}`);
  const rows = probs
    .map((p, i) => {
      const name = names[i] ?? `class ${i}`;
      const pct = Math.max(0, Math.min(1, p)) * 100;
      const over = p >= threshold ? " prob-fill-over" : "";
      return `
        <div class="prob-row">
          <span class="prob-name">${esc(name)}</span>
          <span class="prob-track" data-testid="prob-bar" data-prob="${p}">
            <span class="prob-fill${over}" style="width:${pct.toFixed(2)}%"></span>
            <span class="prob-threshold" data-testid="threshold-marker"
                  style="left:${(threshold * 100).toFixed(2)}%"></span>
          </span>
          <span class="prob-value">${p.toFixed(3)}</span>
        </div>`;
    })
    .join("");
  return `<div class="prob-bars">${rows}</div>`;
}

function pendingRow(item: QuarantineSummary, store: Store): string {
  const draft = store.state.drafts.get(item.id) ?? "";
  const busy = store.state.busy.has(item.id);
  const err = store.state.itemErrors.get(item.id);
  const newClass = store.isNewClassName(draft);
  const disabled = busy ? "disabled" : "";
  return `
    <div class="card pending-row" data-testid="pending-row" data-id="${esc(item.id)}">
      <div class="row-head">
        <code class="item-id">${esc(item.id.slice(0, 12))}</code>
        <span class="received">${esc(item.received_at)}</span>
        <button data-action="inspect" data-id="${esc(item.id)}">inspect</button>
      </div>
      ${probBars(item.probs, store.state.model)}
      <div class="label-form">
        <input data-testid="label-input" data-id="${esc(item.id)}" type="text"
               placeholder="class name" value="${esc(draft)}" ${disabled}>
        <button data-testid="label-submit" data-action="label" data-id="${esc(item.id)}"
                ${disabled}>label</button>
        <button data-testid="dismiss-btn" data-action="dismiss" data-id="${esc(item.id)}"
                ${disabled}>dismiss</button>
        ${newClass ? '<span class="chip chip-new" data-testid="new-class-chip">will create class on retrain</span>' : ""}
      </div>
      ${err ? `<div class="item-error" data-testid="item-error">${esc(err)}</div>` : ""}
    </div>`;
}

function resolvedRow(item: QuarantineSummary, store: Store): string {
  const model = store.state.model;
  const labeledNew =
    item.status === "labeled" && item.class !== undefined && model !== null &&
    !model.classes.includes(item.class);
  const status =
    item.status === "labeled" ? `Labeled(${esc(item.class ?? "")})` : "Dismissed";
  return `
    <div class="resolved-row" data-testid="resolved-row" data-id="${esc(item.id)}">
      <code class="item-id">${esc(item.id.slice(0, 12))}</code>
      <span class="status status-${item.status}" data-testid="row-status">${status}</span>
      ${labeledNew ? '<span class="chip chip-new" data-testid="new-class-chip">will create class on retrain</span>' : ""}
      <button data-action="inspect" data-id="${esc(item.id)}">inspect</button>
    </div>`;
}

function detailPanel(detail: QuarantineDetail, model: ModelInfo | null): string {
  const mins = model?.scaler.mins;
  const maxs = model?.scaler.maxs;
  const names = model?.feature_names ?? null;
  const rows = detail.features.map((raw, i) => {
    let scaled = 0;
    const lo = mins?.[i];
    const hi = maxs?.[i];
    if (lo !== undefined && hi !== undefined && hi > lo) {
      scaled = Math.max(0, Math.min(1, (raw - lo) / (hi - lo)));
    }
    return { name: names?.[i] ?? `f${i}`, raw, scaled };
  });
  rows.sort((a, b) => b.scaled - a.scaled || Math.abs(b.raw) - Math.abs(a.raw));
  const top = rows
    .slice(0, 8)
    .map(
      (r) => `
      <tr data-testid="feature-row">
        <td>${esc(r.name)}</td>
        <td class="num">${fmtRaw(r.raw)}</td>
        <td class="num">${r.scaled.toFixed(3)}</td>
      </tr>`,
    )
    .join("");
  return `
    <section class="panel" data-testid="detail-panel">
      <h2>flow ${esc(detail.id.slice(0, 12))}</h2>
      <p class="muted">status ${esc(detail.status)}, received ${esc(detail.received_at)}</p>
      ${probBars(detail.probs, model)}
      <h3>top features</h3>
      <table class="features">
        <thead><tr><th>feature</th><th>raw</th><th>scaled</th></tr></thead>
        <tbody>${top}</tbody>
      </table>
    </section>`;
}

function modelPanel(model: ModelInfo): string {
  const chips = model.classes
    .map((c) => `<span class="chip" data-testid="class-chip">${esc(c)}</span>`)
    .join("");
  const prov = model.provenance;
  return `
    <section class="panel" data-testid="model-panel">
      <h2>model</h2>
      <div class="chips">${chips}</div>
      <dl>
        <dt>layers</dt><dd>${model.layer_dims.join(" &rarr; ")}</dd>
        <dt>threshold</dt><dd>${model.threshold.toFixed(2)}</dd>
        <dt>trained</dt><dd>seed ${prov.seed}, ${prov.epochs} epochs, ${esc(prov.created_at)}</dd>
        <dt>data digest</dt><dd><code>${esc(prov.dataset_digest.slice(0, 12))}</code></dd>
      </dl>
    </section>`;
}

function metricsPanel(metrics: MetricsReport | null): string {
  if (metrics === null) {
    return `
      <section class="panel" data-testid="metrics-panel">
        <h2>metrics</h2>
        <p class="muted" data-testid="no-metrics">no evaluation yet</p>
      </section>`;
  }
  const rows = metrics.classes
    .map(
      (c) => `
      <tr data-testid="metrics-row">
        <td>${esc(c.class)}</td>
        <td class="num">${c.support}</td>
        <td class="num">${fmt(c.precision)}</td>
        <td class="num">${fmt(c.recall)}</td>
        <td class="num">${fmt(c.f1)}</td>
        <td class="num">${fmt(c.paper_fpr)}</td>
        <td class="num">${fmt(c.standard_fpr)}</td>
      </tr>`,
    )
    .join("");
  return `
    <section class="panel" data-testid="metrics-panel">
      <h2>metrics</h2>
      <p>accuracy <strong data-testid="accuracy">${fmt(metrics.accuracy)}</strong></p>
      <table class="metrics">
        <thead>
          <tr><th>class</th><th>support</th><th>precision</th><th>recall</th>
              <th>f1</th><th>paper fpr</th><th>std fpr</th></tr>
        </thead>
        <tbody>${rows}</tbody>
      </table>
    </section>`;
}

function retrainPanel(store: Store): string {
  const rt = store.state.retrain;
  const labeled = store.labeledCount();
  const disabled = rt.inFlight ? "disabled" : "";
  let status = "";
  if (rt.inFlight && rt.job === null) {
    status = `<p data-testid="retrain-status">starting&hellip;</p>`;
  } else if (rt.job) {
    const job = rt.job;
    if (job.state === "running") {
      status = `<p data-testid="retrain-status">job ${esc(job.job_id.slice(0, 8))} running&hellip;</p>`;
    } else if (job.state === "done") {
      const added = job.new_classes.length
        ? `new classes: ${job.new_classes.map(esc).join(", ")}`
        : "no new classes";
      status = `<p data-testid="retrain-status" class="ok">done, ${added}</p>`;
    } else {
      status = `<p data-testid="retrain-status" class="bad">failed: ${esc(job.error ?? "unknown error")}</p>`;
    }
  }
  return `
    <section class="panel" data-testid="retrain-panel">
      <h2>retrain</h2>
      <p class="muted">${labeled} labeled flow${labeled === 1 ? "" : "s"} ready</p>
      <div class="retrain-form">
        <input data-testid="retrain-epochs" type="text" inputmode="numeric"
               placeholder="epochs (server default)" value="${esc(rt.epochsDraft)}" ${disabled}>
        <button data-testid="retrain-btn" data-action="retrain" ${disabled}>
          ${rt.inFlight ? "retraining…" : "retrain"}
        </button>
      </div>
      ${rt.armed ? '<p class="warn" data-testid="retrain-armed">no labeled flows; click again to retrain anyway</p>' : ""}
      ${rt.error ? `<p class="bad" data-testid="retrain-error">${esc(rt.error)}</p>` : ""}
      ${status}
    </section>`;
}

export function render(root: HTMLElement, store: Store): void {
  const st = store.state;
  const pending = store.pending();
  const resolved = store.resolved();
  const banner = !st.connected
    ? '<div class="banner" data-testid="offline-banner">cannot reach the service; showing last known data</div>'
    : "";
  const pendingBody = pending.length
    ? pending.map((it) => pendingRow(it, store)).join("")
    : '<p class="muted" data-testid="no-pending">no pending items</p>';
  const resolvedBlock = resolved.length
    ? `<h3>resolved</h3>${resolved.map((it) => resolvedRow(it, store)).join("")}`
    : "";
  root.innerHTML = `
    ${banner}
    <header><h1>flowsentry triage</h1></header>
    <main>
      <section class="panel quarantine" data-testid="quarantine-panel">
        <h2>quarantine</h2>
        ${pendingBody}
        ${resolvedBlock}
      </section>
      <div class="side">
        ${retrainPanel(store)}
        ${st.selected ? detailPanel(st.selected, st.model) : ""}
        ${st.model ? modelPanel(st.model) : ""}
        ${metricsPanel(st.metrics)}
      </div>
    </main>`;
}
