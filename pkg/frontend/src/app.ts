// The review console: queue list, repo detail, verdict buttons, live
// precision readout.
//
// Two rules hold everywhere:
//  - repository metadata is untrusted input and is only ever rendered via
//    textContent (the readme lands in a <pre> as plain text, never markup);
//  - the console keeps no authoritative state — every render is derived
//    from the API, so reloading the page reconstructs the same view.

import { ApiClient, ApiError } from './api';
import type { QueueItem, VerdictValue } from './types';

const VERDICT_KEYS: Record<string, VerdictValue> = {
  '1': 'confirmed_malicious',
  '2': 'rejected',
  '3': 'unsure',
};

const VERDICT_BUTTONS: Array<{ value: VerdictValue; label: string; key: string }> = [
  { value: 'confirmed_malicious', label: 'Confirm malicious', key: '1' },
  { value: 'rejected', label: 'Reject', key: '2' },
  { value: 'unsure', label: 'Unsure', key: '3' },
];

const VERDICT_MARKS: Record<VerdictValue, string> = {
  confirmed_malicious: '✓ malicious',
  rejected: '✗ rejected',
  unsure: '? unsure',
};

// Static chrome only — no untrusted data ever goes through innerHTML.
const SKELETON = `
  <header class="console-header">
    <h1>Review queue</h1>
    <span id="progress" class="progress"></span>
    <span id="precision-widget" class="precision" hidden></span>
  </header>
  <div id="banner" class="banner" hidden>
    <span id="banner-text"></span>
    <button id="banner-retry" type="button">Retry</button>
  </div>
  <div id="toast" class="toast" hidden></div>
  <main class="console-main">
    <ul id="queue" class="queue"></ul>
    <section id="detail" class="detail"></section>
  </main>
`;

export interface ConsoleOptions {
  analyst: string;
}

export class ReviewConsole {
  private items: QueueItem[] | null = null;
  private selected: string | null = null; // repo_id, survives refreshes
  private readonly onKeydown = (event: KeyboardEvent) => this.handleKey(event);

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly options: ConsoleOptions,
  ) {
    this.root.innerHTML = SKELETON;
    this.el('banner-retry').addEventListener('click', () => void this.refresh());
    document.addEventListener('keydown', this.onKeydown);
  }

  destroy(): void {
    document.removeEventListener('keydown', this.onKeydown);
  }

  private el(id: string): HTMLElement {
    const node = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!node) throw new Error(`console skeleton is missing #${id}`);
    return node;
  }

  async init(): Promise<void> {
    await this.refresh();
    if (this.items?.length && this.selected === null) {
      const next = this.nextUnreviewed();
      this.select(next ?? this.items[0].repo_id);
    }
  }

  /** Re-derive the whole view from the API. */
  async refresh(): Promise<void> {
    try {
      this.items = await this.client.fetchQueue();
      this.hideBanner();
    } catch (error) {
      this.showBanner(error);
      return;
    }
    this.renderQueue();
    this.renderDetail();
    await this.refreshPrecision();
  }

  private async refreshPrecision(): Promise<void> {
    const widget = this.el('precision-widget');
    try {
      const report = await this.client.fetchPrecision();
      if (report === null) {
        widget.hidden = true;
        return;
      }
      widget.hidden = false;
      widget.textContent =
        `precision ${report.precision.toFixed(2)} (${report.confirmed}/${report.decisive} confirmed)`;
    } catch (error) {
      widget.hidden = true;
    }
  }

  // --- queue pane ---

  private renderQueue(): void {
    const queue = this.el('queue');
    queue.textContent = '';
    const progress = this.el('progress');

    if (this.items === null) {
      progress.textContent = '';
      this.emptyState(queue, 'No active sample. Draw one with the sample stage first.');
      return;
    }
    if (this.items.length === 0) {
      progress.textContent = '0/0';
      this.emptyState(queue, 'The sample is empty.');
      return;
    }

    const reviewed = this.items.filter((item) => item.verdict !== null).length;
    progress.textContent = `${reviewed}/${this.items.length}`;

    for (const item of this.items) {
      const li = document.createElement('li');
      li.className = 'queue-item';
      li.dataset.repoId = item.repo_id;
      if (item.verdict) li.classList.add('reviewed');
      if (item.repo_id === this.selected) li.classList.add('selected');

      const name = document.createElement('span');
      name.className = 'queue-name';
      name.textContent = item.full_name;
      li.appendChild(name);

      if (item.verdict) {
        const mark = document.createElement('span');
        mark.className = 'queue-mark';
        mark.textContent = VERDICT_MARKS[item.verdict.verdict];
        li.appendChild(mark);
      }

      li.addEventListener('click', () => this.select(item.repo_id));
      queue.appendChild(li);
    }
  }

  private emptyState(parent: HTMLElement, message: string): void {
    const li = document.createElement('li');
    li.className = 'empty-state';
    li.textContent = message;
    parent.appendChild(li);
  }

  // --- detail pane ---

  select(repoId: string): void {
    this.selected = repoId;
    this.renderQueue();
    this.renderDetail();
  }

  private current(): QueueItem | null {
    if (!this.items || this.selected === null) return null;
    return this.items.find((item) => item.repo_id === this.selected) ?? null;
  }

  private renderDetail(): void {
    const detail = this.el('detail');
    detail.textContent = '';
    const item = this.current();
    if (!item) return;

    const title = document.createElement('h2');
    title.textContent = item.title;
    detail.appendChild(title);

    const fullName = document.createElement('p');
    fullName.className = 'full-name';
    fullName.textContent = item.full_name;
    detail.appendChild(fullName);

    const meta = document.createElement('p');
    meta.className = 'labels';
    const family = item.family ?? 'unclassified';
    meta.textContent = `model labels: ${item.labels.join(', ') || 'none'} · family: ${family}`;
    detail.appendChild(meta);

    const description = document.createElement('p');
    description.className = 'description';
    description.textContent = item.description;
    detail.appendChild(description);

    const readmeHeading = document.createElement('h3');
    readmeHeading.textContent = item.readme_truncated ? 'Readme (truncated for transport)' : 'Readme';
    detail.appendChild(readmeHeading);

    // untrusted content: plain preformatted text, never parsed as markup
    const readme = document.createElement('pre');
    readme.className = 'readme';
    readme.textContent = item.readme;
    detail.appendChild(readme);

    const actions = document.createElement('div');
    actions.className = 'verdict-buttons';
    for (const spec of VERDICT_BUTTONS) {
      const button = document.createElement('button');
      button.type = 'button';
      button.dataset.verdict = spec.value;
      button.textContent = `[${spec.key}] ${spec.label}`;
      const isStored = item.verdict?.verdict === spec.value;
      button.classList.toggle('active', isStored);
      button.setAttribute('aria-pressed', String(isStored));
      button.addEventListener('click', () => void this.submitVerdict(spec.value));
      actions.appendChild(button);
    }
    detail.appendChild(actions);

    const note = document.createElement('p');
    note.id = 'detail-note';
    note.className = 'detail-note';
    detail.appendChild(note);
  }

  // --- verdicts ---

  private nextUnreviewed(): string | null {
    if (!this.items) return null;
    const start = this.items.findIndex((item) => item.repo_id === this.selected);
    const order = [...this.items.slice(start + 1), ...this.items.slice(0, start + 1)];
    return order.find((item) => item.verdict === null)?.repo_id ?? null;
  }

  async submitVerdict(value: VerdictValue): Promise<void> {
    const item = this.current();
    if (!item) return;
    try {
      const stored = await this.client.postVerdict(item.repo_id, this.options.analyst, value);
      // optimistic local update, reconciled with the server's echo
      item.verdict = {
        repo_id: stored.repo_id,
        analyst: stored.analyst,
        verdict: stored.verdict,
        noted_at: stored.noted_at,
      };
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.toast('The store is busy; try again.');
      } else if (error instanceof ApiError && error.status === 400) {
        this.note(`Rejected by the API: ${error.message}`);
      } else if (error instanceof ApiError && error.status === 404) {
        this.note('This repository is not part of the active sample.');
      } else {
        this.showBanner(error);
      }
      return;
    }
    const next = this.nextUnreviewed();
    if (next !== null) {
      this.select(next);
    } else {
      this.renderQueue();
      this.renderDetail();
      this.note('Every sampled repository has a verdict.');
    }
    await this.refreshPrecision();
  }

  private handleKey(event: KeyboardEvent): void {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) {
      return;
    }
    const verdict = VERDICT_KEYS[event.key];
    if (verdict) void this.submitVerdict(verdict);
  }

  // --- messaging ---

  private note(text: string): void {
    const node = this.root.querySelector<HTMLElement>('#detail-note');
    if (node) node.textContent = text;
  }

  private toast(text: string): void {
    const toast = this.el('toast');
    toast.textContent = text;
    toast.hidden = false;
    setTimeout(() => {
      toast.hidden = true;
    }, 4000);
  }

  private showBanner(error: unknown): void {
    const banner = this.el('banner');
    banner.hidden = false;
    const message = error instanceof Error ? error.message : String(error);
    this.el('banner-text').textContent = `Cannot reach the review API (${message}).`;
  }

  private hideBanner(): void {
    this.el('banner').hidden = true;
  }
}

export function createConsole(root: HTMLElement, client: ApiClient, options: ConsoleOptions): ReviewConsole {
  return new ReviewConsole(root, client, options);
}
