// Boot: ask for analyst id (and bearer token when the API demands one),
// then mount the console. Token and analyst live in memory only.

import { ApiClient, ApiError } from './api';
import { createConsole } from './app';

function field(labelText: string, type: string, name: string): HTMLLabelElement {
  const label = document.createElement('label');
  label.textContent = labelText;
  const input = document.createElement('input');
  input.type = type;
  input.name = name;
  label.appendChild(input);
  return label;
}

function showLoginForm(root: HTMLElement, needToken: boolean, onSubmit: (analyst: string, token: string) => void): void {
  root.textContent = '';
  const form = document.createElement('form');
  form.className = 'login';
  const analyst = field('Analyst id', 'text', 'analyst');
  form.appendChild(analyst);
  let token: HTMLLabelElement | null = null;
  if (needToken) {
    token = field('API token', 'password', 'token');
    form.appendChild(token);
  }
  const submit = document.createElement('button');
  submit.type = 'submit';
  submit.textContent = 'Start reviewing';
  form.appendChild(submit);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const analystValue = analyst.querySelector('input')!.value.trim() || 'analyst';
    const tokenValue = token?.querySelector('input')!.value ?? '';
    onSubmit(analystValue, tokenValue);
  });
  root.appendChild(form);
}

async function boot(root: HTMLElement): Promise<void> {
  const client = new ApiClient();

  const start = async (analyst: string, token: string): Promise<void> => {
    client.setToken(token || null);
    try {
      await client.fetchQueue(); // probe auth before mounting
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        showLoginForm(root, true, (a, t) => void start(a, t));
        return;
      }
      // other failures are surfaced by the console's banner after mount
    }
    root.textContent = '';
    const mount = document.createElement('div');
    mount.id = 'console';
    root.appendChild(mount);
    await createConsole(mount, client, { analyst }).init();
  };

  showLoginForm(root, false, (analyst, token) => void start(analyst, token));
}

const root = document.getElementById('app');
if (root) void boot(root);
