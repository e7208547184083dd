import { ApiClient } from './api.js';
import { mountApp } from './app.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const params = new URLSearchParams(window.location.search);
const databases = (params.get('databases') ?? 'demo').split(',');
const models = (params.get('models') ?? 'default').split(',');

mountApp(root, new ApiClient(''), { databases, models });
