"""
單元測試：數據、圖、模型、訓練、評估與工具模組各一個測試文件。
"""
