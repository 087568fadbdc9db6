"""
graph-deepar 測試包

讓 tests.helpers / tests.fixtures 可以用絕對路徑導入。
"""
