// DOM for the three-pane browser. Every control maps to exactly one
// endpoint; the handlers live in main.ts and this module never talks to
// the network.

import type { BrowserState } from "./state.js";
import { captureTarget } from "./state.js";

export interface Actions {
  createTxn(label: string): void;
  stage(tag: string): void;
  unstage(tag: string): void;
  activate(tag: string, level: string): void;
  deactivate(tag: string, level: string): void;
  merge(tag: string): void;
  abort(tag: string): void;
  toggleView(tag: string): void;
  openMethod(klass: string, selector: string): void;
  saveEditor(): void;
  runTests(): void;
  setAutotest(on: boolean): void;
  evalExpr(expr: string): void;
  startDemo(name: string): void;
  stopDemo(name: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void, enabled = true): HTMLButtonElement {
  const b = el("button", "", label);
  b.disabled = !enabled;
  b.onclick = onClick;
  return b;
}

export class BrowserView {
  private banner: HTMLElement;
  private txnPane: HTMLElement;
  private treePane: HTMLElement;
  private editorHead: HTMLElement;
  private editorArea: HTMLTextAreaElement;
  private editorButtons: HTMLElement;
  private demoPane: HTMLElement;
  private consolePane: HTMLElement;
  private evalInput: HTMLInputElement;

  constructor(
    root: HTMLElement,
    private actions: Actions,
    private getState: () => BrowserState,
  ) {
    this.banner = el("div", "banner hidden");
    root.appendChild(this.banner);

    const panes = el("div", "panes");
    this.txnPane = el("div", "pane pane-txns");
    this.treePane = el("div", "pane pane-tree");
    const editor = el("div", "pane pane-editor");
    this.editorHead = el("div", "editor-head");
    this.editorArea = el("textarea", "editor-area") as HTMLTextAreaElement;
    this.editorArea.spellcheck = false;
    this.editorButtons = el("div", "editor-buttons");
    editor.append(this.editorHead, this.editorArea, this.editorButtons);
    panes.append(this.txnPane, this.treePane, editor);
    root.appendChild(panes);

    const bottom = el("div", "bottom");
    this.demoPane = el("div", "pane pane-demo");
    const consoleWrap = el("div", "pane pane-console");
    const evalRow = el("div", "eval-row");
    this.evalInput = el("input") as HTMLInputElement;
    this.evalInput.placeholder = "evaluate under the selected view…";
    this.evalInput.onkeydown = (ev) => {
      if (ev.key === "Enter" && this.evalInput.value.trim()) {
        this.actions.evalExpr(this.evalInput.value);
        this.evalInput.value = "";
      }
    };
    evalRow.appendChild(this.evalInput);
    this.consolePane = el("div", "console-log");
    consoleWrap.append(evalRow, this.consolePane);
    bottom.append(this.demoPane, consoleWrap);
    root.appendChild(bottom);
  }

  render(): void {
    const state = this.getState();
    this.banner.textContent = "connection lost — read-only until the stream returns";
    this.banner.classList.toggle("hidden", state.connected);
    this.renderTxns(state);
    this.renderTree(state);
    this.renderEditorChrome(state);
    this.renderDemo(state);
    this.renderConsole(state);
  }

  editorSource(): string {
    return this.editorArea.value;
  }

  setEditorSource(source: string): void {
    this.editorArea.value = source;
  }

  onEditorInput(fn: () => void): void {
    this.editorArea.oninput = fn;
  }

  private renderTxns(state: BrowserState): void {
    const pane = this.txnPane;
    pane.textContent = "";
    pane.appendChild(el("h2", "", "transactions"));

    const top = captureTarget(state);
    const stagedNote = el(
      "div",
      "staged-note",
      top ? `accepting into: ${top}` : "nothing staged — accepts need a transaction",
    );
    pane.appendChild(stagedNote);

    const newRow = el("div", "txn-new");
    const labelInput = el("input") as HTMLInputElement;
    labelInput.placeholder = "new transaction label";
    newRow.appendChild(labelInput);
    newRow.appendChild(
      button("create + stage", () => {
        if (labelInput.value.trim()) {
          this.actions.createTxn(labelInput.value.trim());
          labelInput.value = "";
        }
      }, state.connected),
    );
    pane.appendChild(newRow);

    const list = el("div", "txn-list");
    for (const txn of state.transactions) {
      const row = el("div", "txn-row");
      const inView = state.selectedView.includes(txn.tag);
      const mark = el("label", "txn-view");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = inView;
      box.onchange = () => this.actions.toggleView(txn.tag);
      mark.append(box, document.createTextNode(" view"));

      const title = el("span", "txn-title", `${txn.label} [${txn.tag}]`);
      const flags = el("span", "txn-flags",
        (txn.staged ? " staged" : "") + (txn.active_global ? " active" : ""));

      const buttons = el("span", "txn-buttons");
      const enabled = state.connected;
      buttons.append(
        txn.staged
          ? button("unstage", () => this.actions.unstage(txn.tag), enabled)
          : button("stage", () => this.actions.stage(txn.tag), enabled),
        txn.active_global
          ? button("deactivate", () => this.actions.deactivate(txn.tag, levelOf(row)), enabled)
          : button("activate", () => this.actions.activate(txn.tag, levelOf(row)), enabled),
        button("merge", () => this.actions.merge(txn.tag), enabled),
        button("abort", () => this.actions.abort(txn.tag), enabled),
      );

      const level = el("select", "txn-level") as HTMLSelectElement;
      for (const name of ["method", "reentrant", "manual"]) {
        const opt = el("option", "", name) as HTMLOptionElement;
        opt.value = name;
        level.appendChild(opt);
      }
      buttons.appendChild(level);

      const touched = el("div", "txn-touched",
        [...txn.methods, ...txn.fields].join(", "));

      row.append(mark, title, flags, buttons, touched);
      list.appendChild(row);
    }
    pane.appendChild(list);
  }

  private renderTree(state: BrowserState): void {
    const pane = this.treePane;
    pane.textContent = "";
    const viewLabel = state.selectedView.length
      ? state.selectedView.join(", ")
      : "base";
    pane.appendChild(el("h2", "", `classes (${viewLabel})`));
    for (const cls of state.classes) {
      const head = el("div", "tree-class",
        cls.superclass ? `${cls.name} < ${cls.superclass}` : cls.name);
      pane.appendChild(head);
      if (cls.fields.length) {
        pane.appendChild(el("div", "tree-fields", cls.fields.join(" ")));
      }
      for (const m of cls.methods) {
        const row = el("div", "tree-method", m.selector);
        if (m.owner !== cls.name) {
          row.textContent += ` (from ${m.owner})`;
          row.classList.add("inherited");
        }
        if (m.tag !== "base") {
          row.textContent += ` [${m.tag}]`;
          row.classList.add("txn-owned");
        }
        row.onclick = () => this.actions.openMethod(cls.name, m.selector);
        pane.appendChild(row);
      }
    }
  }

  private renderEditorChrome(state: BrowserState): void {
    const { editor } = state;
    this.editorHead.textContent = editor.klass
      ? `${editor.klass} » ${editor.selector}${editor.dirty ? " *" : ""}`
      : "select a method";
    this.editorButtons.textContent = "";
    const canSave = state.connected && this.editorArea.value.trim() !== "";
    this.editorButtons.append(
      button("save", () => this.actions.saveEditor(), canSave),
      button("run tests", () => this.actions.runTests(), state.connected),
    );
    const auto = el("label", "autotest");
    const box = el("input") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = state.autotest;
    box.onchange = () => this.actions.setAutotest(box.checked);
    auto.append(box, document.createTextNode(" test after save"));
    this.editorButtons.appendChild(auto);
  }

  private renderDemo(state: BrowserState): void {
    const pane = this.demoPane;
    pane.textContent = "";
    pane.appendChild(el("h2", "", "demo"));
    const row = el("div", "demo-buttons");
    row.append(
      button("start disease", () => this.actions.startDemo("disease-spreading"), state.connected),
      button("start ball", () => this.actions.startDemo("bouncing-ball"), state.connected),
      button("stop", () => {
        if (state.demo) this.actions.stopDemo(state.demo.name);
      }, state.connected && state.demo !== null),
    );
    pane.appendChild(row);
    if (state.demo) {
      const facts = Object.entries(state.demo)
        .filter(([k]) => !["name", "pid"].includes(k))
        .map(([k, v]) => `${k}: ${v}`)
        .join("   ");
      pane.appendChild(el("div", "demo-facts", `${state.demo.name}   ${facts}`));
    }
    if (state.trend.length > 1) {
      pane.appendChild(sparkline(state.trend.map((p) => p.infected)));
    }
  }

  private renderConsole(state: BrowserState): void {
    const pane = this.consolePane;
    pane.textContent = "";
    for (const entry of state.console.slice(-80)) {
      const row = el("div", `console-entry ${entry.severity}`, entry.text);
      pane.appendChild(row);
    }
    pane.scrollTop = pane.scrollHeight;
  }
}

function levelOf(row: HTMLElement): string {
  const select = row.querySelector("select");
  return select ? (select as HTMLSelectElement).value : "method";
}

// Tiny inline SVG; good enough to see the infected-count trend bend when
// a transaction is activated against the running demo.
function sparkline(values: number[]): SVGSVGElement {
  const w = 260;
  const h = 48;
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(w));
  svg.setAttribute("height", String(h));
  svg.setAttribute("class", "sparkline");
  const max = Math.max(...values, 1);
  const step = values.length > 1 ? w / (values.length - 1) : w;
  const points = values
    .map((v, i) => `${(i * step).toFixed(1)},${(h - (v / max) * (h - 4) - 2).toFixed(1)}`)
    .join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.appendChild(line);
  return svg;
}
