"""
測試輔助：面板構造器與暴力計算的參考實現。
"""
