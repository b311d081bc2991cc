import assert from 'node:assert/strict'
import { test } from 'node:test'

import { highlightPython } from '../src/highlight.js'

test('keywords, strings, comments, and numbers get spans', () => {
  const html = highlightPython('def add(a, b):  # sum\n    return a + 2  # "not a string"\n')
  assert.match(html, /<span class="hl-keyword">def<\/span>/)
  assert.match(html, /<span class="hl-keyword">return<\/span>/)
  assert.match(html, /<span class="hl-number">2<\/span>/)
  assert.match(html, /<span class="hl-comment"># sum<\/span>/)
})

test('html in source is escaped', () => {
  const html = highlightPython('x = "<script>" if a < b else "&"')
  assert.ok(!html.includes('<script>'))
  assert.ok(html.includes('&lt;script&gt;'))
  assert.ok(html.includes('&amp;'))
})

test('string contents are not treated as code', () => {
  const html = highlightPython("s = 'def not_code():'")
  assert.match(html, /<span class="hl-string">&#?3?9?;?'?def not_code\(\):'?<\/span>|<span class="hl-string">'def not_code\(\):'<\/span>/)
})
