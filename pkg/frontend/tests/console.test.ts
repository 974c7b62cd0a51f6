// Scripted browser tests for the review console, driven through the DOM
// against a fake server speaking the review API's wire contract.

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { ReviewConsole, createConsole } from '../src/app';
import { FakeServer, makeItem } from './fake-server';

let server: FakeServer;
let root: HTMLElement;
let consoles: ReviewConsole[] = [];

function threeRepoSample(): FakeServer {
  return new FakeServer([
    makeItem({ repo_id: 'r1' }),
    makeItem({ repo_id: 'r2', family: 'ransomware' }),
    makeItem({ repo_id: 'r3', family: null }),
  ]);
}

async function mount(target?: HTMLElement): Promise<ReviewConsole> {
  const host = target ?? root;
  const app = createConsole(host, new ApiClient(), { analyst: 'alice' });
  consoles.push(app);
  await app.init();
  return app;
}

function click(host: HTMLElement, selector: string): void {
  const node = host.querySelector<HTMLElement>(selector);
  expect(node, selector).not.toBeNull();
  node!.click();
}

async function settle(done?: () => boolean): Promise<void> {
  // fetch chains resolve across macrotask turns; tick until settled
  const ticks = done ? 200 : 10;
  for (let i = 0; i < ticks; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
    if (done?.()) return;
  }
  if (done) throw new Error('condition never settled');
}

function postCount(): number {
  return server.requests.filter((r) => r.method === 'POST').length;
}

function widgetText(host: HTMLElement): string | null {
  const widget = host.querySelector<HTMLElement>('#precision-widget');
  return widget && !widget.hidden ? widget.textContent : null;
}

function viewState(host: HTMLElement) {
  return {
    progress: host.querySelector('#progress')?.textContent,
    precision: widgetText(host),
    queue: [...host.querySelectorAll<HTMLElement>('.queue-item')].map((li) => ({
      repo: li.dataset.repoId,
      reviewed: li.classList.contains('reviewed'),
      mark: li.querySelector('.queue-mark')?.textContent ?? null,
    })),
  };
}

beforeEach(() => {
  server = threeRepoSample();
  server.install();
  root = document.createElement('div');
  document.body.appendChild(root);
});

afterEach(() => {
  consoles.forEach((app) => app.destroy());
  consoles = [];
  document.body.textContent = '';
});

describe('queue view', () => {
  it('lists items in sample order with progress', async () => {
    server.items[0].verdict = {
      repo_id: 'r1', analyst: 'alice', verdict: 'confirmed_malicious', noted_at: 'x',
    };
    await mount();
    const ids = [...root.querySelectorAll<HTMLElement>('.queue-item')].map((li) => li.dataset.repoId);
    expect(ids).toEqual(['r1', 'r2', 'r3']);
    expect(root.querySelector('#progress')?.textContent).toBe('1/3');
    expect(root.querySelector<HTMLElement>('.queue-item.reviewed')?.dataset.repoId).toBe('r1');
  });

  it('shows an empty-state message for an empty sample', async () => {
    server.items = [];
    await mount();
    expect(root.querySelector('.empty-state')?.textContent).toMatch(/empty/i);
    expect(root.querySelector('#progress')?.textContent).toBe('0/0');
  });

  it('shows a retry banner when the API is unreachable, without crashing', async () => {
    server.failNext = 1;
    const app = await mount();
    const banner = root.querySelector<HTMLElement>('#banner');
    expect(banner?.hidden).toBe(false);
    expect(banner?.textContent).toMatch(/cannot reach/i);

    await app.refresh(); // API is back
    expect(root.querySelector<HTMLElement>('#banner')?.hidden).toBe(true);
    expect(root.querySelectorAll('.queue-item')).toHaveLength(3);
  });
});

describe('repo detail', () => {
  it('renders metadata, labels, family, and verdict buttons', async () => {
    await mount();
    const detail = root.querySelector<HTMLElement>('#detail')!;
    expect(detail.querySelector('h2')?.textContent).toBe('r1');
    expect(detail.querySelector('.labels')?.textContent).toContain('malicious, malicious');
    expect(detail.querySelector('.labels')?.textContent).toContain('keylogger');
    expect(detail.querySelectorAll('.verdict-buttons button')).toHaveLength(3);
  });

  it('posts the clicked verdict and advances to the next unreviewed repo', async () => {
    await mount();
    click(root, 'button[data-verdict="confirmed_malicious"]');
    await settle();

    const post = server.requests.find((r) => r.method === 'POST');
    expect(post?.body).toEqual({
      repo_id: 'r1',
      analyst: 'alice',
      verdict: 'confirmed_malicious',
    });
    expect(root.querySelector<HTMLElement>('.queue-item.selected')?.dataset.repoId).toBe('r2');
  });

  it('maps keyboard shortcuts 1/2/3 to the three verdicts', async () => {
    await mount();
    let expected = 0;
    for (const key of ['1', '2', '3']) {
      expected += 1;
      const want = expected;
      document.dispatchEvent(new KeyboardEvent('keydown', { key, bubbles: true }));
      await settle(() => postCount() === want);
    }
    const posted = server.requests.filter((r) => r.method === 'POST').map((r) => (r.body as any).verdict);
    expect(posted).toEqual(['confirmed_malicious', 'rejected', 'unsure']);
  });

  it('preselects the stored verdict when revisiting a reviewed repo', async () => {
    const app = await mount();
    click(root, 'button[data-verdict="rejected"]'); // rules on r1, advances to r2
    await settle();

    app.select('r1'); // revisit
    const active = root.querySelector<HTMLElement>('.verdict-buttons button.active');
    expect(active?.dataset.verdict).toBe('rejected');
    expect(active?.getAttribute('aria-pressed')).toBe('true');
  });

  it('shows a conflict toast on 409 and a validation message on 400', async () => {
    await mount();
    server.verdictStatusOverride = 409;
    click(root, 'button[data-verdict="rejected"]');
    await settle();
    expect(root.querySelector<HTMLElement>('#toast')?.hidden).toBe(false);
    expect(root.querySelector('#toast')?.textContent).toMatch(/busy/i);

    server.verdictStatusOverride = 400;
    click(root, 'button[data-verdict="rejected"]');
    await settle();
    expect(root.querySelector('#detail-note')?.textContent).toMatch(/rejected by the api/i);
  });
});

describe('console flow (acceptance)', () => {
  it('records three verdicts via the UI, shows 0.67 precision, and reloads identically', async () => {
    await mount();

    // confirm, confirm, reject — the console advances by itself
    click(root, 'button[data-verdict="confirmed_malicious"]');
    await settle(() => postCount() === 1);
    click(root, 'button[data-verdict="confirmed_malicious"]');
    await settle(() => postCount() === 2);
    click(root, 'button[data-verdict="rejected"]');
    await settle(() => widgetText(root)?.includes('2/3') ?? false);

    expect(root.querySelector('#progress')?.textContent).toBe('3/3');
    expect(widgetText(root)).toContain('0.67');
    expect(widgetText(root)).toContain('2/3 confirmed');

    const posted = server.requests
      .filter((r) => r.method === 'POST')
      .map((r) => [(r.body as any).repo_id, (r.body as any).verdict]);
    expect(posted).toEqual([
      ['r1', 'confirmed_malicious'],
      ['r2', 'confirmed_malicious'],
      ['r3', 'rejected'],
    ]);

    // "reload": a fresh mount must reconstruct the exact same view from the API
    const before = viewState(root);
    const freshRoot = document.createElement('div');
    document.body.appendChild(freshRoot);
    await mount(freshRoot);
    expect(viewState(freshRoot)).toEqual(before);
  });

  it('keeps the precision widget hidden until a decisive verdict exists', async () => {
    await mount();
    expect(widgetText(root)).toBeNull();

    click(root, 'button[data-verdict="unsure"]'); // indecisive: still hidden
    await settle(() => postCount() === 1);
    expect(widgetText(root)).toBeNull();

    click(root, 'button[data-verdict="confirmed_malicious"]');
    await settle(() => widgetText(root) !== null);
    expect(widgetText(root)).toContain('1.00');
  });
});

describe('safety (acceptance)', () => {
  it('renders script markup in readmes as inert escaped text', async () => {
    const payload = '<script>window.__pwned = true;</script><img src=x onerror="window.__pwned = true">';
    server.items[0].readme = payload;
    server.items[0].description = '<b>bold?</b> <script>window.__pwned = true;</script>';
    await mount();

    const readme = root.querySelector<HTMLElement>('.readme')!;
    expect(readme.textContent).toBe(payload); // shown verbatim as text
    expect(readme.querySelector('script')).toBeNull();
    expect(readme.querySelector('img')).toBeNull();
    expect(readme.innerHTML).toContain('&lt;script&gt;');
    expect(root.querySelector('.description b')).toBeNull();
    expect((window as any).__pwned).toBeUndefined();
  });
});
